#include "bumpvo/cli.hpp"

#include <charconv>
#include <cstdio>

#include "json.hpp"

#include "bumpvo/eval.hpp"
#include "bumpvo/image.hpp"
#include "bumpvo/io_util.hpp"
#include "bumpvo/synth.hpp"

namespace bumpvo::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const char* b = text.data();
    const char* e = b + text.size();
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw ConfigError(key, "not an unsigned integer: '" + text + "'");
    return v;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

}  // namespace

RunConfig RunConfig::from_config(const KeyValueConfig& kv) {
    RunConfig rc;
    TrackerConfig& t = rc.tracker;
    try {
        t.mode = parse_mode(kv.get_string("mode", to_string(t.mode)));
    } catch (const InvalidArgument& e) {
        throw ConfigError("mode", e.what());
    }
    if (kv.has("seed")) t.seed = parse_seed("seed", kv.get_string("seed", ""));

    t.K.fx = kv.get_double("fx", t.K.fx);
    t.K.fy = kv.get_double("fy", t.K.fy);
    t.K.cx = kv.get_double("cx", t.K.cx);
    t.K.cy = kv.get_double("cy", t.K.cy);
    require(t.K.fx > 0.0, "fx", "must be > 0");
    require(t.K.fy > 0.0, "fy", "must be > 0");

    t.preprocess_sigma = kv.get_double("preprocess_sigma", t.preprocess_sigma);
    t.pyramid_levels = kv.get_int("pyramid_levels", t.pyramid_levels);
    t.pyramid_scale = kv.get_double("pyramid_scale", t.pyramid_scale);
    t.pyramid_blur = kv.get_double("pyramid_blur", t.pyramid_blur);
    require(t.preprocess_sigma >= 0.0, "preprocess_sigma", "must be >= 0");
    require(t.pyramid_levels >= 1, "pyramid_levels", "must be >= 1");
    require(t.pyramid_scale > 1.0, "pyramid_scale", "must be > 1");
    require(t.pyramid_blur >= 0.0, "pyramid_blur", "must be >= 0");

    auto& x = t.extractor;
    x.n_features = kv.get_int("n_features", x.n_features);
    x.fast_threshold = kv.get_double("fast_threshold", x.fast_threshold);
    x.fast_min_threshold = kv.get_double("fast_min_threshold", x.fast_min_threshold);
    x.desc_blur_sigma = kv.get_double("desc_blur_sigma", x.desc_blur_sigma);
    require(x.n_features >= 1, "n_features", "must be >= 1");
    require(x.fast_threshold > 0.0, "fast_threshold", "must be > 0");
    require(x.fast_min_threshold > 0.0 && x.fast_min_threshold <= x.fast_threshold, "fast_min_threshold",
            "must be in (0, fast_threshold]");
    require(x.desc_blur_sigma >= 0.0, "desc_blur_sigma", "must be >= 0");

    auto& m = t.matching;
    m.max_hamming = kv.get_int("max_hamming", m.max_hamming);
    m.ratio = kv.get_double("ratio", m.ratio);
    m.cross_check = kv.get_bool("cross_check", m.cross_check);
    require(m.max_hamming >= 0 && m.max_hamming <= 256, "max_hamming", "must be in [0, 256]");
    require(m.ratio > 0.0 && m.ratio <= 1.0, "ratio", "must be in (0, 1]");

    auto& f = t.flow;
    f.window = kv.get_int("lk_window", f.window);
    f.max_iters = kv.get_int("lk_max_iters", f.max_iters);
    f.eps = kv.get_double("lk_eps", f.eps);
    f.max_level = kv.get_int("lk_max_level", f.max_level);
    f.min_eigen = kv.get_double("lk_min_eigen", f.min_eigen);
    t.flow_pyramid_scale = kv.get_double("flow_pyramid_scale", t.flow_pyramid_scale);
    t.fb_thresh = kv.get_double("fb_thresh", t.fb_thresh);
    t.disagree_thresh = kv.get_double("disagree_thresh", t.disagree_thresh);
    require(f.window >= 3 && f.window % 2 == 1, "lk_window", "must be odd and >= 3");
    require(f.max_iters >= 1, "lk_max_iters", "must be >= 1");
    require(f.eps > 0.0, "lk_eps", "must be > 0");
    require(f.max_level >= 0, "lk_max_level", "must be >= 0");
    require(f.min_eigen >= 0.0, "lk_min_eigen", "must be >= 0");
    require(t.flow_pyramid_scale > 1.0, "flow_pyramid_scale", "must be > 1");
    require(t.fb_thresh > 0.0, "fb_thresh", "must be > 0");
    require(t.disagree_thresh > 0.0, "disagree_thresh", "must be > 0");

    auto& r = t.rotation;
    r.bins = kv.get_int("rotation_bins", r.bins);
    r.keep_top = kv.get_int("rotation_keep_top", r.keep_top);
    r.min_bin_share = kv.get_double("rotation_min_share", r.min_bin_share);
    require(r.bins >= 3, "rotation_bins", "must be >= 3");
    require(r.keep_top >= 1, "rotation_keep_top", "must be >= 1");
    require(r.min_bin_share >= 0.0 && r.min_bin_share <= 1.0, "rotation_min_share", "must be in [0, 1]");

    t.match_floor = kv.get_int("match_floor", t.match_floor);
    t.budget_multiplier = kv.get_double("budget_multiplier", t.budget_multiplier);
    t.budget_decay = kv.get_double("budget_decay", t.budget_decay);
    require(t.match_floor >= 0, "match_floor", "must be >= 0");
    require(t.budget_multiplier >= 1.0, "budget_multiplier", "must be >= 1");
    require(t.budget_decay > 0.0 && t.budget_decay <= 1.0, "budget_decay", "must be in (0, 1]");

    t.promote_ratio = kv.get_double("promote_ratio", t.promote_ratio);
    t.max_kf_gap = kv.get_int("max_kf_gap", t.max_kf_gap);
    t.min_tracked = kv.get_int("min_tracked", t.min_tracked);
    require(t.promote_ratio >= 0.0 && t.promote_ratio <= 1.0, "promote_ratio", "must be in [0, 1]");
    require(t.max_kf_gap >= 1, "max_kf_gap", "must be >= 1");
    require(t.min_tracked >= 8, "min_tracked", "must be >= 8");

    t.ransac_iters = kv.get_int("ransac_iters", t.ransac_iters);
    t.ransac_thresh_px = kv.get_double("ransac_thresh_px", t.ransac_thresh_px);
    t.min_parallax_px = kv.get_double("min_parallax_px", t.min_parallax_px);
    require(t.ransac_iters >= 1, "ransac_iters", "must be >= 1");
    require(t.ransac_thresh_px > 0.0, "ransac_thresh_px", "must be > 0");
    require(t.min_parallax_px >= 0.0, "min_parallax_px", "must be >= 0");

    kv.reject_unknown();
    return rc;
}

RunConfig RunConfig::load(const fs::path& path) { return from_config(KeyValueConfig::load(path)); }

std::string RunConfig::manifest() const {
    const TrackerConfig& t = tracker;
    ManifestWriter w;
    w.add("mode", std::string(to_string(t.mode)));
    w.add("seed", std::to_string(t.seed));
    w.add("fx", t.K.fx);
    w.add("fy", t.K.fy);
    w.add("cx", t.K.cx);
    w.add("cy", t.K.cy);
    w.add("preprocess_sigma", t.preprocess_sigma);
    w.add("pyramid_levels", t.pyramid_levels);
    w.add("pyramid_scale", t.pyramid_scale);
    w.add("pyramid_blur", t.pyramid_blur);
    w.add("n_features", t.extractor.n_features);
    w.add("fast_threshold", t.extractor.fast_threshold);
    w.add("fast_min_threshold", t.extractor.fast_min_threshold);
    w.add("desc_blur_sigma", t.extractor.desc_blur_sigma);
    w.add("max_hamming", t.matching.max_hamming);
    w.add("ratio", t.matching.ratio);
    w.add("cross_check", t.matching.cross_check);
    w.add("lk_window", t.flow.window);
    w.add("lk_max_iters", t.flow.max_iters);
    w.add("lk_eps", t.flow.eps);
    w.add("lk_max_level", t.flow.max_level);
    w.add("lk_min_eigen", t.flow.min_eigen);
    w.add("flow_pyramid_scale", t.flow_pyramid_scale);
    w.add("fb_thresh", t.fb_thresh);
    w.add("disagree_thresh", t.disagree_thresh);
    w.add("rotation_bins", t.rotation.bins);
    w.add("rotation_keep_top", t.rotation.keep_top);
    w.add("rotation_min_share", t.rotation.min_bin_share);
    w.add("match_floor", t.match_floor);
    w.add("budget_multiplier", t.budget_multiplier);
    w.add("budget_decay", t.budget_decay);
    w.add("promote_ratio", t.promote_ratio);
    w.add("max_kf_gap", t.max_kf_gap);
    w.add("min_tracked", t.min_tracked);
    w.add("ransac_iters", t.ransac_iters);
    w.add("ransac_thresh_px", t.ransac_thresh_px);
    w.add("min_parallax_px", t.min_parallax_px);
    return w.str();
}

VoOutputs vo_outputs(const fs::path& trajectory) {
    VoOutputs o;
    o.trajectory = trajectory;
    fs::path base = trajectory;
    base.replace_extension();
    o.stats = base.string() + ".stats.csv";
    o.manifest = base.string() + ".manifest.txt";
    return o;
}

int cmd_synth(const fs::path& config, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
    synth::SequenceConfig cfg;
    try {
        const KeyValueConfig kv = KeyValueConfig::load(config);
        cfg = synth::SequenceConfig::from_config(kv);
        kv.reject_unknown();
    } catch (const Error& e) {
        // an unreadable config file is a usage error too
        err << "synth: " << e.what() << "\n";
        return kConfigError;
    }
    try {
        synth::generate_sequence(cfg, out_dir);
    } catch (const IoError& e) {
        err << "synth: " << e.what() << "\n";
        return kIoError;
    }
    out << "wrote " << cfg.frame_count() << " frames to " << out_dir.string() << "\n";
    return kOk;
}

int cmd_vo(const fs::path& seq_dir, const fs::path& config, const fs::path& out_traj,
           const std::optional<std::string>& mode, const std::optional<std::uint64_t>& seed, std::ostream& out,
           std::ostream& err) {
    RunConfig rc;
    try {
        if (!config.empty()) rc = RunConfig::load(config);
        if (mode) rc.tracker.mode = parse_mode(*mode);
        if (seed) rc.tracker.seed = *seed;
    } catch (const Error& e) {
        err << "vo: " << e.what() << "\n";
        return kConfigError;
    }

    const fs::path times_path = seq_dir / "times.txt";
    if (!fs::is_regular_file(times_path)) {
        err << "vo: missing " << times_path.string() << "\n";
        return kConfigError;
    }
    std::vector<double> times;
    try {
        times = read_times(times_path);
    } catch (const Error& e) {
        err << "vo: " << e.what() << "\n";
        return kConfigError;
    }
    if (times.empty()) {
        err << "vo: " << times_path.string() << " lists no frames\n";
        return kConfigError;
    }

    Tracker tracker(rc.tracker);
    for (size_t i = 0; i < times.size(); ++i) {
        GrayImage img;
        try {
            img = load_pgm(seq_dir / frame_filename(static_cast<int>(i)));
        } catch (const Error& e) {
            err << "vo: frame " << i << ": " << e.what() << "\n";
            return kIoError;
        }
        try {
            tracker.track_frame(img, times[i]);
        } catch (const InvalidArgument& e) {
            err << "vo: frame " << i << ": " << e.what() << "\n";
            return kConfigError;
        }
    }

    const VoOutputs paths = vo_outputs(out_traj);
    ManifestWriter man;
    man.comment("bumpvo vo run, resolved configuration");
    man.add("version", std::string(kVersion));
    man.add("sequence", seq_dir.string());
    man.add("frames", static_cast<int>(times.size()));
    const std::string manifest = man.str() + rc.manifest();
    try {
        write_tum(tracker.trajectory(), paths.trajectory);
        write_file_atomic(paths.stats, stats_csv(tracker.stats()));
        write_file_atomic(paths.manifest, manifest);
    } catch (const IoError& e) {
        err << "vo: " << e.what() << "\n";
        return kIoError;
    }

    int lost = 0;
    for (const auto& r : tracker.stats()) lost += r.lost ? 1 : 0;
    out << "tracked " << times.size() << " frames, " << lost << " lost\n";
    if (lost == static_cast<int>(times.size())) {
        err << "vo: no frame was tracked\n";
        return kTrackingFailed;
    }
    return kOk;
}

namespace {

void print_stats(std::ostream& out, const std::string& prefix, const ErrorStats& s, bool json) {
    const std::pair<const char*, double> fields[] = {
        {"rmse", s.rmse}, {"mean", s.mean}, {"median", s.median}, {"min", s.min}, {"max", s.max},
        {"n", static_cast<double>(s.n)},
    };
    for (const auto& [name, value] : fields) {
        if (json) {
            nlohmann::json j;
            j["metric"] = prefix + "." + name;
            if (std::string(name) == "n")
                j["value"] = s.n;
            else
                j["value"] = value;
            out << j.dump() << "\n";
        } else if (std::string(name) == "n") {
            out << prefix << " n " << s.n << "\n";
        } else {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s %-6s %.6f\n", prefix.c_str(), name, value);
            out << buf;
        }
    }
}

}  // namespace

int cmd_eval(const fs::path& est_path, const fs::path& gt_path, const EvalOptions& opts, std::ostream& out,
             std::ostream& err) {
    Trajectory est, gt;
    for (const auto& [p, t] : {std::pair{&est_path, &est}, std::pair{&gt_path, &gt}}) {
        if (!fs::is_regular_file(*p)) {
            err << "eval: missing " << p->string() << "\n";
            return kConfigError;
        }
        try {
            *t = read_tum(*p);
        } catch (const IoError& e) {
            err << "eval: " << e.what() << "\n";
            return kIoError;
        } catch (const Error& e) {
            err << "eval: " << p->string() << ": " << e.what() << "\n";
            return kConfigError;
        }
    }
    if (opts.delta < 1) {
        err << "eval: --delta must be >= 1\n";
        return kConfigError;
    }
    try {
        if (opts.metric == Metric::Ate) {
            const AteResult r = ate(est, gt, opts.with_scale, opts.max_dt);
            print_stats(out, "ate", r.stats, opts.json);
        } else {
            const RpeResult r = rpe(est, gt, opts.delta, opts.max_dt);
            print_stats(out, "rpe_trans", r.translational, opts.json);
            print_stats(out, "rpe_rot", r.rotational, opts.json);
        }
    } catch (const EmptyAssociation& e) {
        err << "eval: " << e.what() << "\n";
        return kEmptyAssociation;
    } catch (const InsufficientOverlap& e) {
        err << "eval: " << e.what() << "\n";
        return kEmptyAssociation;
    } catch (const DegenerateAlignment& e) {
        err << "eval: " << e.what() << "\n";
        return kEmptyAssociation;
    }
    return kOk;
}

int cmd_plot(const std::vector<fs::path>& inputs, const fs::path& out_svg, std::ostream& out, std::ostream& err) {
    if (inputs.empty()) {
        err << "plot: no input trajectories\n";
        return kConfigError;
    }
    std::vector<NamedTrajectory> named;
    for (const auto& p : inputs) {
        if (!fs::is_regular_file(p)) {
            err << "plot: missing " << p.string() << "\n";
            return kConfigError;
        }
        try {
            named.push_back({p.stem().string(), read_tum(p)});
        } catch (const IoError& e) {
            err << "plot: " << e.what() << "\n";
            return kIoError;
        } catch (const Error& e) {
            err << "plot: " << p.string() << ": " << e.what() << "\n";
            return kConfigError;
        }
    }
    try {
        write_plot_svg(named, out_svg);
    } catch (const IoError& e) {
        err << "plot: " << e.what() << "\n";
        return kIoError;
    }
    out << "wrote " << out_svg.string() << "\n";
    return kOk;
}

}  // namespace bumpvo::cli
