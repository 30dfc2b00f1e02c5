// adiabatic-lab: run experiment configs, check model hypotheses, list the
// bundled fixtures.

#include "adiabatic/lab.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

int list_fixtures(const std::string& dir, bool paths) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    if (ec) {
        std::cerr << "error: cannot list fixtures in " << dir << ": " << ec.message() << "\n";
        return adiabatic::exit_code::usage;
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::string description;
        try {
            const auto j = adiabatic::read_json_file(f.string());
            if (j.contains("description") && j["description"].is_string()) description = j["description"];
        } catch (const std::exception&) {
        }
        std::cout << f.stem().string();
        if (paths) std::cout << "\t" << f.string();
        else if (!description.empty()) std::cout << "\t" << description;
        std::cout << "\n";
    }
    return adiabatic::exit_code::ok;
}

std::optional<int> jobs_from_env() {
    const char* v = std::getenv("ADIABATIC_LAB_JOBS");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) return -1;
    return static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adiabatic evolution experiments for contraction semigroups"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir = ".";
    int jobs = 0;
    unsigned long long seed = 0;
    auto* out_opt = app.add_option("--out", out_dir, "Output directory for results and manifest");
    auto* jobs_opt = app.add_option("--jobs", jobs, "Parallel sweep jobs (default: $ADIABATIC_LAB_JOBS or 1)")
                         ->check(CLI::Range(1, 1024));
    auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
    (void)out_opt;

    std::string config;
    auto* run = app.add_subcommand("run", "Run the experiment described by a config");
    run->add_option("config", config, "Experiment config (JSON)")->required();
    auto* check = app.add_subcommand("check", "Check model hypotheses for a config");
    check->add_option("config", config, "Experiment config (JSON)")->required();
    bool paths = false;
    std::string fixture_dir = ADIABATIC_FIXTURE_DIR;
    auto* list = app.add_subcommand("list-fixtures", "List the bundled example configs");
    list->add_flag("--paths", paths, "Print file paths instead of descriptions");
    list->add_option("--dir", fixture_dir, "Fixture directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : adiabatic::exit_code::usage;
    }

    if (list->parsed()) return list_fixtures(fixture_dir, paths);

    adiabatic::LabOptions opt;
    opt.out_dir = out_dir;
    if (jobs_opt->count() > 0) {
        opt.jobs = jobs;
    } else if (const auto env = jobs_from_env()) {
        if (*env < 1) {
            std::cerr << "error: ADIABATIC_LAB_JOBS must be an integer in [1, 1024]\n";
            return adiabatic::exit_code::usage;
        }
        opt.jobs = *env;
    }
    if (seed_opt->count() > 0) opt.seed = seed;
    const auto cmd = run->parsed() ? adiabatic::LabCommand::run : adiabatic::LabCommand::check;
    return adiabatic::lab_main(cmd, config, opt, std::cerr);
}
