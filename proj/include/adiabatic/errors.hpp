#pragma once

#include <stdexcept>
#include <string>

namespace adiabatic {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A structural hypothesis on the generator failed (gap, semisimplicity, ...).
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// The numerics could not deliver the requested accuracy.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NonSemisimpleKernel : public HypothesisError {
public:
    using HypothesisError::HypothesisError;
};

class NoGap : public HypothesisError {
public:
    using HypothesisError::HypothesisError;
};

class DegenerateHamiltonian : public HypothesisError {
public:
    using HypothesisError::HypothesisError;
};

class Reducible : public HypothesisError {
public:
    using HypothesisError::HypothesisError;
};

class NoDetailedBalance : public HypothesisError {
public:
    using HypothesisError::HypothesisError;
};

class NotAState : public HypothesisError {
public:
    using HypothesisError::HypothesisError;
};

class IllConditioned : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Step-size control underflowed; the caller must relax the request.
class StepUnderflow : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SmoothnessLoss : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConfigInvalid : public Error {
public:
    using Error::Error;
};

}  // namespace adiabatic
