#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gpgd/experiment.hpp"

int main(int argc, char** argv) {
    namespace ex = gpgd::experiment;

    CLI::App app{"Group-PGD experiments: projected gradient with symmetry-sampled operators"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    auto add = [&](const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "experiment config file")->required();
        sub->add_option("--out", out, "output directory (overrides output.directory)");
        return sub;
    };
    auto* run = add("run", "run PGD and Group-PGD, write traces and certificate");
    auto* certify = add("certify", "compute and print the convergence certificate");
    auto* compare = add("compare", "seed-ensemble comparison against the bound");
    auto* phantom = add("phantom", "write the ground-truth phantom as P2 and CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ex::kParseError;
    }

    ex::CommandOptions opts;
    opts.config = config;
    if (!out.empty()) opts.out_override = out;

    if (run->parsed()) return ex::cmd_run(opts, std::cout, std::cerr);
    if (certify->parsed()) return ex::cmd_certify(opts, std::cout, std::cerr);
    if (compare->parsed()) return ex::cmd_compare(opts, std::cout, std::cerr);
    if (phantom->parsed()) return ex::cmd_phantom(opts, std::cout, std::cerr);
    return ex::kFailure;
}
