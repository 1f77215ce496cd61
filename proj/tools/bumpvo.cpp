#include <iostream>

#include "CLI11.hpp"

#include "bumpvo/cli.hpp"

int main(int argc, char** argv) {
    using namespace bumpvo::cli;

    CLI::App app{"bumpvo: hybrid descriptor/flow visual odometry on bumpy sequences"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string synth_config, synth_out;
    auto* synth = app.add_subcommand("synth", "render a synthetic sequence");
    synth->add_option("config", synth_config, "sequence config file")->required();
    synth->add_option("out_dir", synth_out, "output directory")->required();

    std::string seq_dir, vo_config, vo_out, mode;
    std::uint64_t seed = 0;
    auto* vo = app.add_subcommand("vo", "run odometry over a sequence");
    vo->add_option("sequence", seq_dir, "sequence directory")->required();
    vo->add_option("out", vo_out, "output trajectory (TUM)")->required();
    vo->add_option("-c,--config", vo_config, "run config file");
    auto* mode_opt = vo->add_option("--mode", mode, "hybrid | descriptor-only | flow-only")
                         ->check(CLI::IsMember({"hybrid", "descriptor-only", "flow-only"}));
    auto* seed_opt = vo->add_option("--seed", seed, "RANSAC seed");

    std::string est, gt, metric = "ate";
    EvalOptions eopts;
    auto* ev = app.add_subcommand("eval", "compare a trajectory against ground truth");
    ev->add_option("estimate", est, "estimated trajectory (TUM)")->required();
    ev->add_option("groundtruth", gt, "ground-truth trajectory (TUM)")->required();
    ev->add_option("--metric", metric, "ate | rpe")->check(CLI::IsMember({"ate", "rpe"}));
    ev->add_option("--delta", eopts.delta, "RPE frame interval")->capture_default_str();
    ev->add_option("--with-scale", eopts.with_scale, "Sim(3) alignment for ATE")->capture_default_str();
    ev->add_option("--max-dt", eopts.max_dt, "association tolerance, seconds")->capture_default_str();
    ev->add_flag("--json", eopts.json, "JSON-lines output");

    std::vector<std::string> plot_in;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot", "top-down SVG of trajectories");
    plot->add_option("-o,--out", plot_out, "output SVG")->required();
    plot->add_option("trajectories", plot_in, "TUM files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (*synth) return cmd_synth(synth_config, synth_out, std::cout, std::cerr);
    if (*vo) {
        std::optional<std::string> m;
        std::optional<std::uint64_t> s;
        if (*mode_opt) m = mode;
        if (*seed_opt) s = seed;
        return cmd_vo(seq_dir, vo_config, vo_out, m, s, std::cout, std::cerr);
    }
    if (*ev) {
        eopts.metric = metric == "rpe" ? Metric::Rpe : Metric::Ate;
        return cmd_eval(est, gt, eopts, std::cout, std::cerr);
    }
    std::vector<std::filesystem::path> inputs(plot_in.begin(), plot_in.end());
    return cmd_plot(inputs, plot_out, std::cout, std::cerr);
}
