#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "treexp/experiments.hpp"
#include "treexp/version.hpp"

namespace {

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw treexp::IoFailure("cannot open config file '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw treexp::ConfigError("", std::string("invalid JSON: ") + e.what());
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw treexp::IoFailure("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw treexp::IoFailure("failed writing '" + path.string() + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"treexp: scenario-tree sublinear expectation experiments"};
    app.set_version_flag("--version", treexp::version_string);

    std::string config_path;
    std::string out_dir = "./out";
    std::uint64_t seed = 0;
    std::size_t max_enum = 10'000'000;
    std::string format = "json";
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "seed override")->capture_default_str();
    auto* enum_opt =
        app.add_option("--max-enum", max_enum, "enumeration cap override")->capture_default_str();
    app.add_option("--format", format, "json, or csv to also write node-wise values")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        const nlohmann::json config = load_config(config_path);
        treexp::RunOptions options;
        if (seed_opt->count() > 0) options.seed = seed;
        if (enum_opt->count() > 0) options.max_enum = max_enum;
        options.format = format;

        const treexp::RunResult result = treexp::run_experiment(config, options);

        std::filesystem::create_directories(out_dir);
        const auto report_path = std::filesystem::path(out_dir) / result.report_filename;
        write_file(report_path, result.report.dump(2) + "\n");
        if (format == "csv")
            write_file(std::filesystem::path(out_dir) / result.tabular_filename, result.tabular);

        std::cout << result.report["experiment"].get<std::string>() << ": "
                  << result.report["status"].get<std::string>() << " (report "
                  << report_path.string() << ")\n";
        return result.exit_code;
    } catch (const treexp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const treexp::SizeLimit& e) {
        std::cerr << "size limit: " << e.what() << "\n";
        return 2;
    } catch (const treexp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
