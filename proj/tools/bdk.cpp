// bdk - command line driver for the boundary-guided diffusion toolkit.
//
// Every run writes a manifest (command, argv, flags, seed, artifact
// checksums) next to its outputs; replaying the recorded argv reproduces
// the outputs bit for bit.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bdk/boundary.hpp"
#include "bdk/editor.hpp"
#include "bdk/errors.hpp"
#include "bdk/geometry.hpp"
#include "bdk/io.hpp"
#include "bdk/manifest.hpp"
#include "bdk/markov_tv.hpp"
#include "bdk/mixing.hpp"
#include "bdk/noise_model.hpp"
#include "bdk/rng.hpp"
#include "bdk/schedule.hpp"
#include "bdk/synth_data.hpp"
#include "bdk/trajectory.hpp"
#include "bdk/vec.hpp"

#ifndef BDK_BUILD_ID
#define BDK_BUILD_ID "unknown"
#endif

namespace {

using json = nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_checksum_hex(const std::string& path) {
    const std::string bytes = bdk::read_text_file(path);
    return hex64(bdk::fnv1a64(bytes));
}

struct RunContext {
    std::string command;
    std::vector<std::string> argv;
    std::string out_dir;
    std::uint64_t seed = 1;
    bdk::RunManifest manifest;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    std::string path(const std::string& name) const { return out_dir + "/" + name; }

    void note_output(const std::string& p) { manifest.outputs.push_back(p); }

    void record_flags(const CLI::App* sub) {
        for (const CLI::Option* opt : sub->get_options()) {
            if (opt->count() == 0) continue;
            std::string joined;
            for (const auto& r : opt->results()) {
                if (!joined.empty()) joined += ",";
                joined += r;
            }
            manifest.flags[opt->get_name()] = joined;
        }
    }

    void finish() {
        manifest.command = command;
        manifest.argv = argv;
        manifest.seed = seed;
        manifest.build_id = BDK_BUILD_ID;
        manifest.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const std::string p = path(command + ".manifest.json");
        bdk::save_manifest(manifest, p);
        std::cout << "manifest: " << p << "\n";
    }
};

std::string scan_to_csv(const bdk::RadiusScan& scan) {
    std::ostringstream out;
    out << "step,r,delta_r,std_error\n";
    char buf[64];
    for (const auto& e : scan.entries) {
        out << e.step << ",";
        std::snprintf(buf, sizeof buf, "%.17g", e.r);
        out << buf << ",";
        if (e.has_delta) {
            std::snprintf(buf, sizeof buf, "%.17g", e.delta_r);
            out << buf;
        }
        out << ",";
        std::snprintf(buf, sizeof buf, "%.17g", e.std_error);
        out << buf << "\n";
    }
    return out.str();
}

json scan_to_json(const bdk::RadiusScan& scan) {
    json rows = json::array();
    for (const auto& e : scan.entries) {
        json row;
        row["step"] = e.step;
        row["r"] = e.r;
        row["std_error"] = e.std_error;
        if (e.has_delta) row["delta_r"] = e.delta_r;
        rows.push_back(row);
    }
    json j;
    j["stride"] = scan.stride;
    j["n_samples"] = scan.n_samples;
    j["entries"] = rows;
    return j;
}

void dump_trajectory_csv(const bdk::Trajectory& traj, int sample_id, const std::string& path) {
    std::ostringstream out;
    out << "sample_id,step,coordinate_index,value\n";
    char buf[64];
    for (const auto& st : traj.states) {
        for (std::size_t i = 0; i < st.x.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", st.x[i]);
            out << sample_id << "," << st.t << "," << i << "," << buf << "\n";
        }
    }
    bdk::write_text_file(path, out.str());
}

void dump_trajectory_binary(const bdk::Trajectory& traj, const std::string& path) {
    bdk::BinaryWriter w;
    w.write_bytes("BDKJ", 4);
    w.write_u32(1);
    w.write_u32(static_cast<std::uint32_t>(traj.states.size()));
    w.write_u32(traj.states.empty() ? 0u : static_cast<std::uint32_t>(traj.states[0].x.size()));
    for (const auto& st : traj.states) {
        w.write_i32(st.t);
        for (double v : st.x) w.write_f32(static_cast<float>(v));
    }
    w.save_with_checksum(path);
}

bdk::SpriteDataset load_data_or_throw(const std::string& path) {
    if (path.empty()) throw bdk::ValidationError("--data is required for this command");
    return bdk::load_dataset(path);
}

struct PassTable {
    bool all_ok = true;
    void row(const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
        if (!detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << "\n";
        all_ok = all_ok && ok;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------

void cmd_gen_data(RunContext& ctx, int n, int side, int channels, int position_jitter,
                  double amplitude_jitter, double pixel_noise, const std::string& name) {
    bdk::SpriteConfig cfg;
    cfg.side = side;
    cfg.channels = channels;
    cfg.position_jitter = position_jitter;
    cfg.amplitude_jitter = amplitude_jitter;
    cfg.pixel_noise = pixel_noise;
    cfg.seed = ctx.seed;
    bdk::SpriteDataset ds = bdk::generate_sprite_dataset(cfg, n);
    const std::string out = ctx.path(name);
    bdk::save_dataset(ds, out);
    ctx.note_output(out);

    const std::string preview = ctx.path("dataset_preview.ppm");
    std::vector<bdk::Vec> head(ds.images.begin(),
                               ds.images.begin() + std::min<std::size_t>(ds.images.size(), 16));
    bdk::write_pixmap_grid(preview, head, side, channels, 4);
    ctx.note_output(preview);
    std::cout << "wrote " << n << " images (d=" << cfg.dim() << ") to " << out << "\n";
}

void cmd_train(RunContext& ctx, const std::string& data_path, int epochs, int batch_size,
               double lr, int hidden, int bottleneck, int time_embed, int T, double beta_start,
               double beta_end, bool passthrough, const std::string& name) {
    bdk::SpriteDataset ds = load_data_or_throw(data_path);
    const int d = ds.dim();
    if (bottleneck <= 0) bottleneck = std::max(2, d / 8);

    bdk::NoiseSchedule schedule = bdk::make_linear_schedule(T, beta_start, beta_end);
    bdk::NoisePredictor model =
        bdk::init_predictor({d, hidden, bottleneck, hidden, d}, time_embed, ctx.seed, passthrough);

    bdk::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.learning_rate = lr;
    cfg.seed = ctx.seed;
    bdk::TrainResult res = bdk::train_predictor(std::move(model), ds.images, schedule, cfg);

    const std::string ckpt = ctx.path(name);
    bdk::save_checkpoint(res.model, schedule, ckpt);
    ctx.note_output(ckpt);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt));

    std::ostringstream csv;
    csv << "epoch,loss\n";
    for (std::size_t e = 0; e < res.loss_curve.size(); ++e)
        csv << e << "," << res.loss_curve[e] << "\n";
    const std::string loss_path = ctx.path("loss_curve.csv");
    bdk::write_text_file(loss_path, csv.str());
    ctx.note_output(loss_path);

    std::cout << "trained " << res.model.param_count() << " params, loss "
              << fmt(res.loss_curve.front()) << " -> " << fmt(res.loss_curve.back()) << "\n";
}

void cmd_radius_scan(RunContext& ctx, const std::string& ckpt_path, const std::string& data_path,
                     const std::string& source, const std::string& sampler, int samples,
                     int stride) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::Rng rng(ctx.seed);

    std::vector<bdk::LatentState> starts;
    if (source == "sampled") {
        for (int i = 0; i < samples; ++i) {
            bdk::Rng stream = rng.split(1).split(static_cast<std::uint64_t>(i));
            starts.push_back({bdk::sample_standard_latent(ck.predictor.data_dim(), stream),
                              ck.schedule.T, bdk::LatentSource::sampled});
        }
    } else if (source == "inverted") {
        bdk::SpriteDataset ds = load_data_or_throw(data_path);
        bdk::require(static_cast<int>(ds.size()) >= samples,
                     "radius-scan: dataset smaller than --samples");
        bdk::StepPlan plan = bdk::make_step_plan(ck.schedule, ck.schedule.T, ck.schedule.T,
                                                 bdk::ChainDirection::invert);
        for (int i = 0; i < samples; ++i)
            starts.push_back(bdk::ddim_invert(ck.predictor, ck.schedule,
                                              ds.images[static_cast<std::size_t>(i)], plan));
    } else {
        throw bdk::ValidationError("--source must be sampled or inverted");
    }

    bdk::TrajectoryMode mode;
    if (sampler == "stochastic") mode = bdk::TrajectoryMode::stochastic;
    else if (sampler == "deterministic") mode = bdk::TrajectoryMode::deterministic;
    else throw bdk::ValidationError("--sampler must be stochastic or deterministic");

    bdk::RadiusScan scan =
        bdk::radius_scan(ck.predictor, ck.schedule, starts, mode,
                         bdk::StochasticKernel::ancestral_ddpm, stride, rng.split(2));

    const std::string csv_path = ctx.path("radius_scan.csv");
    bdk::write_text_file(csv_path, scan_to_csv(scan));
    ctx.note_output(csv_path);
    const std::string json_path = ctx.path("radius_scan.json");
    json j = scan_to_json(scan);
    j["source"] = source;
    j["sampler"] = sampler;
    bdk::write_text_file(json_path, j.dump(2) + "\n");
    ctx.note_output(json_path);

    std::cout << "radius at T: " << fmt(scan.entries.front().r) << " (sqrt(d)="
              << fmt(std::sqrt(static_cast<double>(ck.predictor.data_dim()))) << ")\n";
}

void cmd_find_mixing(RunContext& ctx, const std::string& ckpt_path, const std::string& data_path,
                     int samples, int stride, double threshold, bool normalize, int burn_in,
                     bool drops_only, bool relative) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::SpriteDataset ds = load_data_or_throw(data_path);
    bdk::Rng rng(ctx.seed);

    bdk::MixingDetectionPolicy policy;
    policy.threshold = threshold;
    policy.normalize_per_100 = normalize;
    policy.burn_in_strides = burn_in;
    policy.drops_only = drops_only;
    policy.relative = relative;
    bdk::MixingCrossValidation cv = bdk::cross_validate_mixing(
        ck.predictor, ck.schedule, ds.images, samples, stride, policy, rng);

    json j;
    j["stride"] = cv.stride;
    j["threshold"] = cv.policy.threshold;
    j["normalized_per_100"] = normalize;
    j["all_detected"] = cv.all_detected;
    j["agree_within_one_stride"] = cv.agree_within_one_stride;
    if (cv.consensus_t_m) j["consensus_t_m"] = *cv.consensus_t_m;
    for (const auto& [name, rep] : cv.combos) {
        json cj;
        if (rep.t_m) cj["t_m"] = *rep.t_m;
        else cj["t_m"] = nullptr;
        cj["wide_std_error"] = rep.wide_std_error;
        cj["scan"] = scan_to_json(rep.scan);
        j["combos"][name] = cj;

        const std::string csv_path = ctx.path("scan_" + name + ".csv");
        bdk::write_text_file(csv_path, scan_to_csv(rep.scan));
        ctx.note_output(csv_path);
    }
    const std::string out = ctx.path("mixing_report.json");
    bdk::write_text_file(out, j.dump(2) + "\n");
    ctx.note_output(out);

    for (const auto& [name, rep] : cv.combos) {
        std::cout << name << ": t_m = ";
        if (rep.t_m) std::cout << *rep.t_m;
        else std::cout << "none-found";
        std::cout << "\n";
    }
    std::cout << "agreement within one stride: " << (cv.agree_within_one_stride ? "yes" : "no")
              << "\n";
}

void cmd_invert(RunContext& ctx, const std::string& ckpt_path, const std::string& data_path,
                int index, int t_end, int steps_inv, const std::string& format) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::SpriteDataset ds = load_data_or_throw(data_path);
    bdk::require(index >= 0 && index < static_cast<int>(ds.size()), "invert: --index out of range");
    if (t_end <= 0) t_end = ck.schedule.T;
    if (steps_inv <= 0) steps_inv = t_end;

    bdk::StepPlan plan =
        bdk::make_step_plan(ck.schedule, steps_inv, t_end, bdk::ChainDirection::invert);
    bdk::LatentState latent =
        bdk::ddim_invert(ck.predictor, ck.schedule, ds.images[static_cast<std::size_t>(index)], plan);

    bdk::Trajectory traj;
    traj.states.push_back(latent);
    if (format == "csv") {
        const std::string out = ctx.path("latent.csv");
        dump_trajectory_csv(traj, index, out);
        ctx.note_output(out);
    } else if (format == "bin") {
        const std::string out = ctx.path("latent.bin");
        dump_trajectory_binary(traj, out);
        ctx.note_output(out);
    } else {
        throw bdk::ValidationError("--format must be csv or bin");
    }
    std::cout << "inverted image " << index << " to t=" << latent.t
              << ", |x| = " << fmt(bdk::norm(latent.x)) << "\n";
}

void cmd_reconstruct(RunContext& ctx, const std::string& ckpt_path, const std::string& data_path,
                     int count, int steps_inv, int steps_gen) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::SpriteDataset ds = load_data_or_throw(data_path);
    bdk::require(count >= 1 && count <= static_cast<int>(ds.size()),
                 "reconstruct: --count out of range");
    const int T = ck.schedule.T;
    if (steps_inv <= 0) steps_inv = T;
    if (steps_gen <= 0) steps_gen = T;

    bdk::StepPlan inv = bdk::make_step_plan(ck.schedule, steps_inv, T, bdk::ChainDirection::invert);
    bdk::StepPlan gen = bdk::make_step_plan(ck.schedule, steps_gen, T, bdk::ChainDirection::denoise);
    bdk::RunOptions opts;
    opts.mode = bdk::TrajectoryMode::deterministic;
    opts.record_stride = T;

    std::ostringstream csv;
    csv << "index,rmse\n";
    double total = 0.0;
    bdk::Rng rng(ctx.seed);
    std::vector<bdk::Vec> reconstructions;
    for (int i = 0; i < count; ++i) {
        const bdk::Vec& x0 = ds.images[static_cast<std::size_t>(i)];
        bdk::LatentState latent = bdk::ddim_invert(ck.predictor, ck.schedule, x0, inv);
        bdk::Trajectory traj = bdk::run_trajectory(ck.predictor, ck.schedule, latent, gen, opts, rng);
        const double err = bdk::rmse(x0, traj.final_state().x);
        total += err;
        csv << i << "," << err << "\n";
        if (i < 8) reconstructions.push_back(traj.final_state().x);
    }
    const double mean_rmse = total / count;
    const std::string csv_path = ctx.path("reconstruction_rmse.csv");
    bdk::write_text_file(csv_path, csv.str());
    ctx.note_output(csv_path);
    const std::string grid = ctx.path("reconstructions.ppm");
    bdk::write_pixmap_grid(grid, reconstructions, ds.config.side, ds.config.channels, 4);
    ctx.note_output(grid);
    std::cout << "mean reconstruction rmse over " << count << " images: " << fmt(mean_rmse) << "\n";
}

void cmd_fit_boundary(RunContext& ctx, const std::string& ckpt_path, const std::string& data_path,
                      const std::string& attribute, int t_m, const std::string& space,
                      int n_latents, int epochs, double lambda, bool no_bias) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::SpriteDataset ds = load_data_or_throw(data_path);
    bdk::require(ds.labels.count(attribute) == 1,
                 "fit-boundary: dataset has no labels for attribute '" + attribute + "'");
    bdk::require(n_latents >= 2 && n_latents <= static_cast<int>(ds.size()),
                 "fit-boundary: --latents out of range");
    bdk::require(t_m >= 1 && t_m <= ck.schedule.T, "fit-boundary: --tm out of range");

    std::vector<bdk::Vec> images(ds.images.begin(), ds.images.begin() + n_latents);
    std::vector<int> labels(ds.labels.at(attribute).begin(),
                            ds.labels.at(attribute).begin() + n_latents);

    bdk::SvmConfig cfg;
    cfg.epochs = epochs;
    cfg.lambda = lambda;
    cfg.seed = ctx.seed;
    cfg.fit_bias = !no_bias;

    auto fit_one = [&](bdk::LatentSpace sp) {
        bdk::LatentDataset latents = bdk::assemble_latent_dataset(
            ck.predictor, ck.schedule, images, labels, attribute, t_m, sp);
        bdk::Boundary b = bdk::fit_boundary(latents, cfg);
        const std::string out =
            ctx.path("boundary_" + attribute + "_" + bdk::to_string(sp) + ".bdy");
        bdk::save_boundary(b, out);
        ctx.note_output(out);
        ctx.manifest.boundary_checksums.push_back(file_checksum_hex(out));
        std::cout << bdk::to_string(sp) << " boundary: train acc " << fmt(b.train_accuracy)
                  << ", test acc " << fmt(b.test_accuracy) << " -> " << out << "\n";
    };

    if (space == "epsilon") fit_one(bdk::LatentSpace::epsilon);
    else if (space == "h") fit_one(bdk::LatentSpace::h);
    else if (space == "both") {
        fit_one(bdk::LatentSpace::epsilon);
        fit_one(bdk::LatentSpace::h);
    } else {
        throw bdk::ValidationError("--space must be epsilon, h, or both");
    }
}

void cmd_eval_boundary(RunContext& ctx, const std::string& ckpt_path, const std::string& data_path,
                       const std::string& boundary_path, int n_latents, int skip) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::Boundary b = bdk::load_boundary(boundary_path);
    ctx.manifest.boundary_checksums.push_back(file_checksum_hex(boundary_path));
    bdk::SpriteDataset ds = load_data_or_throw(data_path);
    bdk::require(ds.labels.count(b.attribute) == 1,
                 "eval-boundary: dataset has no labels for attribute '" + b.attribute + "'");
    bdk::require(skip >= 0 && n_latents >= 1 &&
                     skip + n_latents <= static_cast<int>(ds.size()),
                 "eval-boundary: --latents/--skip out of range");

    std::vector<bdk::Vec> images(ds.images.begin() + skip,
                                 ds.images.begin() + skip + n_latents);
    std::vector<int> labels(ds.labels.at(b.attribute).begin() + skip,
                            ds.labels.at(b.attribute).begin() + skip + n_latents);
    bdk::LatentDataset latents = bdk::assemble_latent_dataset(
        ck.predictor, ck.schedule, images, labels, b.attribute, b.t_m, b.space);
    const double acc = bdk::evaluate_boundary(b, latents);

    json j;
    j["attribute"] = b.attribute;
    j["space"] = bdk::to_string(b.space);
    j["t_m"] = b.t_m;
    j["n"] = n_latents;
    j["accuracy"] = acc;
    const std::string out = ctx.path("boundary_eval.json");
    bdk::write_text_file(out, j.dump(2) + "\n");
    ctx.note_output(out);
    std::cout << "accuracy on " << n_latents << " latents: " << fmt(acc) << "\n";
}

bdk::EditSpec build_edit_spec(const std::vector<std::string>& boundary_paths,
                              const std::vector<double>& zetas, const std::string& mode,
                              int h_iterative, RunContext& ctx) {
    bdk::require(!boundary_paths.empty(), "at least one --boundary is required");
    bdk::require(boundary_paths.size() == zetas.size(),
                 "need exactly one --zeta per --boundary");
    bdk::EditSpec spec;
    if (mode == "set-distance") spec.mode = bdk::EditMode::set_distance;
    else if (mode == "additive") spec.mode = bdk::EditMode::additive;
    else throw bdk::ValidationError("--mode must be set-distance or additive");
    spec.h_injection =
        h_iterative > 1 ? bdk::HInjection::iterative(h_iterative) : bdk::HInjection::single_step();

    for (std::size_t i = 0; i < boundary_paths.size(); ++i) {
        bdk::Boundary b = bdk::load_boundary(boundary_paths[i]);
        ctx.manifest.boundary_checksums.push_back(file_checksum_hex(boundary_paths[i]));
        if (b.space == bdk::LatentSpace::epsilon) {
            bdk::require(!spec.epsilon_edit.has_value(), "duplicate epsilon-space boundary");
            spec.epsilon_edit = bdk::BoundaryEdit{std::move(b), zetas[i]};
        } else {
            bdk::require(!spec.h_edit.has_value(), "duplicate h-space boundary");
            spec.h_edit = bdk::BoundaryEdit{std::move(b), zetas[i]};
        }
    }
    return spec;
}

json events_to_json(const std::vector<bdk::EditEvent>& events) {
    json out = json::array();
    for (const auto& e : events) {
        json j;
        j["step"] = e.step;
        j["space"] = bdk::to_string(e.space);
        j["pre_distance"] = e.pre_distance;
        j["post_distance"] = e.post_distance;
        out.push_back(j);
    }
    return out;
}

void cmd_edit(RunContext& ctx, const std::string& ckpt_path, const std::string& data_path,
              int index, const std::vector<std::string>& boundary_paths,
              const std::vector<double>& zetas, const std::string& mode, int t_m, int steps_inv,
              int steps_gen, int h_iterative, const std::string& dump_format) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::SpriteDataset ds = load_data_or_throw(data_path);
    bdk::require(index >= 0 && index < static_cast<int>(ds.size()), "edit: --index out of range");

    bdk::EditSpec spec = build_edit_spec(boundary_paths, zetas, mode, h_iterative, ctx);
    if (steps_inv <= 0) steps_inv = t_m;
    if (steps_gen <= 0) steps_gen = t_m;

    bdk::Rng rng(ctx.seed);
    bdk::EditOutcome out =
        bdk::boundary_diffusion_conditional(ck.predictor, ck.schedule,
                                            ds.images[static_cast<std::size_t>(index)], spec, t_m,
                                            steps_inv, steps_gen, rng);

    const std::string grid = ctx.path("edit.ppm");
    std::vector<bdk::Vec> panel{ds.images[static_cast<std::size_t>(index)], out.image};
    bdk::write_pixmap_grid(grid, panel, ds.config.side, ds.config.channels, 2);
    ctx.note_output(grid);

    json j;
    j["index"] = index;
    j["t_m"] = t_m;
    j["mode"] = mode;
    j["events"] = events_to_json(out.events);
    for (const auto& attr : ds.config.attributes) {
        const auto verdict = bdk::attribute_oracle(out.image, ds.config, attr);
        j["oracle"][attr] = verdict == bdk::OracleVerdict::positive    ? "positive"
                            : verdict == bdk::OracleVerdict::negative ? "negative"
                                                                      : "undecided";
    }
    const std::string report = ctx.path("edit_report.json");
    bdk::write_text_file(report, j.dump(2) + "\n");
    ctx.note_output(report);

    if (dump_format == "csv") {
        const std::string p = ctx.path("edit_trajectory.csv");
        dump_trajectory_csv(out.tail, index, p);
        ctx.note_output(p);
    } else if (dump_format == "bin") {
        const std::string p = ctx.path("edit_trajectory.bin");
        dump_trajectory_binary(out.tail, p);
        ctx.note_output(p);
    } else if (dump_format != "none") {
        throw bdk::ValidationError("--dump-trajectory must be csv, bin, or none");
    }
    std::cout << "edited image " << index << "; " << out.events.size()
              << " latent mutation(s) at t_m=" << t_m << "\n";
}

void cmd_sample(RunContext& ctx, const std::string& ckpt_path,
                const std::vector<std::string>& boundary_paths, const std::vector<double>& zetas,
                const std::string& mode, int t_m, int steps_top, int steps_gen, int count,
                int h_iterative, int side, int channels) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::EditSpec spec = build_edit_spec(boundary_paths, zetas, mode, h_iterative, ctx);
    if (steps_top <= 0) steps_top = ck.schedule.T - t_m;
    if (steps_gen <= 0) steps_gen = t_m;

    std::vector<bdk::Vec> images;
    bdk::Rng rng(ctx.seed);
    for (int i = 0; i < count; ++i) {
        bdk::Rng stream = rng.split(static_cast<std::uint64_t>(i));
        bdk::EditOutcome out = bdk::boundary_diffusion_unconditional(
            ck.predictor, ck.schedule, spec, t_m, steps_top, steps_gen, stream);
        images.push_back(std::move(out.image));
    }
    const std::string grid = ctx.path("samples.ppm");
    bdk::write_pixmap_grid(grid, images, side, channels, std::min(count, 8));
    ctx.note_output(grid);
    std::cout << "wrote " << count << " guided samples to " << grid << "\n";
}

void cmd_sweep(RunContext& ctx, const std::string& ckpt_path, const std::string& data_path,
               int index, const std::string& boundary_path, double zeta_min, double zeta_max,
               int zeta_steps, int t_m, int steps_inv, int steps_gen,
               double degradation_threshold) {
    bdk::Checkpoint ck = bdk::load_checkpoint(ckpt_path);
    ctx.manifest.checkpoint_checksum = hex64(bdk::checkpoint_file_checksum(ckpt_path));
    bdk::SpriteDataset ds = load_data_or_throw(data_path);
    bdk::require(index >= 0 && index < static_cast<int>(ds.size()), "sweep: --index out of range");
    bdk::Boundary b = bdk::load_boundary(boundary_path);
    ctx.manifest.boundary_checksums.push_back(file_checksum_hex(boundary_path));
    bdk::require(zeta_steps >= 2, "sweep: need at least 2 grid points");
    if (steps_inv <= 0) steps_inv = t_m;
    if (steps_gen <= 0) steps_gen = t_m;

    std::vector<double> grid(static_cast<std::size_t>(zeta_steps));
    for (int i = 0; i < zeta_steps; ++i)
        grid[static_cast<std::size_t>(i)] =
            zeta_min + (zeta_max - zeta_min) * i / (zeta_steps - 1);

    const std::string attr = b.attribute;
    bdk::Rng rng(ctx.seed);
    bdk::SweepResult res = bdk::strength_sweep(
        ck.predictor, ck.schedule, ds.images[static_cast<std::size_t>(index)], b, grid, t_m,
        steps_inv, steps_gen, rng,
        [&](const bdk::Vec& img) { return bdk::attribute_statistic(img, ds.config, attr); },
        ds.images, degradation_threshold);

    std::ostringstream csv;
    csv << "zeta,oracle_statistic,oracle_verdict,nn_rmse,degraded\n";
    std::vector<bdk::Vec> gallery;
    for (const auto& row : res.rows) {
        const auto verdict = bdk::attribute_oracle(row.image, ds.config, attr);
        csv << row.zeta << "," << row.oracle_score << ","
            << (verdict == bdk::OracleVerdict::positive    ? "positive"
                : verdict == bdk::OracleVerdict::negative ? "negative"
                                                          : "undecided")
            << "," << row.nn_rmse << "," << (row.degraded ? 1 : 0) << "\n";
        gallery.push_back(row.image);
    }
    const std::string csv_path = ctx.path("sweep.csv");
    bdk::write_text_file(csv_path, csv.str());
    ctx.note_output(csv_path);
    const std::string grid_path = ctx.path("sweep.ppm");
    bdk::write_pixmap_grid(grid_path, gallery, ds.config.side, ds.config.channels,
                           static_cast<int>(gallery.size()));
    ctx.note_output(grid_path);
    std::cout << "swept " << zeta_steps << " strengths over [" << zeta_min << ", " << zeta_max
              << "]\n";
}

int cmd_verify_geometry(std::uint64_t seed) {
    PassTable table;
    bdk::Rng root(seed);

    for (int d : {16, 1024, 12288}) {
        bdk::RadiusEstimate est = bdk::standard_normal_radius(d, 1000, root.split(d));
        const double expect = std::sqrt(static_cast<double>(d));
        const bool ok = std::abs(est.r - expect) <= 3.0 * est.std_error;
        table.row("radius d=" + std::to_string(d), ok,
                  "r=" + fmt(est.r) + " expect " + fmt(expect) + " se " + fmt(est.std_error));
    }

    const auto m2 = bdk::unit_sphere_volume_area(2);
    const auto m3 = bdk::unit_sphere_volume_area(3);
    table.row("sphere d=2", std::abs(m2.volume - std::numbers::pi) < 1e-12 &&
                                std::abs(m2.area - 2 * std::numbers::pi) < 1e-12,
              "V=" + fmt(m2.volume) + " A=" + fmt(m2.area));
    table.row("sphere d=3", std::abs(m3.volume - 4.0 * std::numbers::pi / 3.0) < 1e-12 &&
                                std::abs(m3.area - 4 * std::numbers::pi) < 1e-12,
              "V=" + fmt(m3.volume) + " A=" + fmt(m3.area));
    bool mono = true;
    for (int d = 20; d < 200; ++d)
        mono = mono && bdk::unit_sphere_volume_area(d + 1).volume <
                           bdk::unit_sphere_volume_area(d).volume;
    table.row("sphere volume -> 0", mono && bdk::unit_sphere_volume_area(200).volume < 1e-100, "");

    for (double c : {2.0, 4.0}) {
        bdk::Rng r = root.split(static_cast<std::uint64_t>(100 + c));
        const auto frac = bdk::hemisphere_slab_fraction(50, c, 100000, r);
        const bool ok = frac.fraction <= frac.bound + 3 * frac.std_error;
        table.row("hemisphere slab c=" + fmt(c), ok,
                  "frac=" + fmt(frac.fraction) + " bound=" + fmt(frac.bound));
    }

    {
        bdk::Rng r = root.split(200);
        const auto proj = bdk::random_projection_check(1000, 500, 10000, 0.5, r);
        table.row("random projection", proj.failure_rate <= proj.bound,
                  "fail=" + fmt(proj.failure_rate) + " bound=" + fmt(proj.bound));
    }

    {
        // annulus concentration: lengths within sqrt(d) +- 5
        bdk::Rng r = root.split(300);
        const int d = 12288, n = 1000;
        int inside = 0;
        bdk::Vec x(static_cast<std::size_t>(d));
        const double sq = std::sqrt(static_cast<double>(d));
        for (int i = 0; i < n; ++i) {
            bdk::Rng stream = r.split(static_cast<std::uint64_t>(i));
            for (double& v : x) v = stream.normal();
            const double len = bdk::norm(x);
            if (len >= sq - 5 && len <= sq + 5) ++inside;
        }
        table.row("annulus concentration", inside >= static_cast<int>(0.99 * n),
                  std::to_string(inside) + "/1000 inside sqrt(d) +- 5");
    }

    std::cout << (table.all_ok ? "all geometry checks passed" : "geometry checks FAILED") << "\n";
    return table.all_ok ? 0 : static_cast<int>(bdk::ErrorFamily::numeric);
}

int cmd_verify_mixing(std::uint64_t seed) {
    PassTable table;
    bdk::Rng rng(seed);

    {
        bool ok = true;
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            bdk::Rng r = rng.split(static_cast<std::uint64_t>(trial));
            const std::size_t n = 2 + r.below(11);  // support up to 12
            auto draw = [&]() {
                std::vector<double> p(n);
                double total = 0.0;
                for (double& v : p) {
                    v = r.uniform() + 1e-12;
                    total += v;
                }
                for (double& v : p) v /= total;
                // exact renormalization of the largest entry
                double acc = 0.0;
                for (std::size_t i = 0; i + 1 < p.size(); ++i) acc += p[i];
                p.back() = 1.0 - acc;
                return bdk::DiscreteDistribution{p};
            };
            auto mu = draw();
            auto nu = draw();
            const double fast = bdk::tv_distance(mu, nu);
            const double brute = bdk::tv_distance_bruteforce(mu, nu);
            worst = std::max(worst, std::abs(fast - brute));
            ok = ok && std::abs(fast - brute) <= 1e-12;
        }
        table.row("tv oracle (1000 pairs)", ok, "worst |diff| = " + fmt(worst));
    }

    {
        auto chain = bdk::DiscreteChain::from({{0.9, 0.1}, {0.2, 0.8}});
        auto res = bdk::chain_mixing_time(chain, bdk::DiscreteDistribution{{0.5, 0.5}}, 0.25);
        // worst-start TV decays as (2/3) 0.7^t; first t below 1/4 is 3
        const int expected = 3;
        table.row("two-state closed form", res.t_mix.has_value() && *res.t_mix == expected,
                  "t_mix = " + (res.t_mix ? std::to_string(*res.t_mix) : "none"));
    }

    {
        bdk::DiscreteDistribution inc{{0.0, 0.6, 0.4, 0.0, 0.0}};  // +1 w.p. 0.6, +2 w.p. 0.4
        auto res = bdk::time_reversal_check(inc);
        table.row("time reversal on Z_5", res.equal,
                  "forward=" + (res.t_mix_forward ? std::to_string(*res.t_mix_forward) : "none") +
                      " reversed=" +
                      (res.t_mix_reversed ? std::to_string(*res.t_mix_reversed) : "none"));
    }

    {
        // convergence + submultiplicativity on a random 5-state chain
        bdk::Rng r = rng.split(9999);
        std::vector<std::vector<double>> P(5, std::vector<double>(5));
        for (auto& row : P) {
            double total = 0.0;
            for (double& v : row) {
                v = r.uniform() + 0.05;
                total += v;
            }
            for (double& v : row) v /= total;
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < row.size(); ++i) acc += row[i];
            row.back() = 1.0 - acc;
        }
        auto chain = bdk::DiscreteChain::from(std::move(P));
        auto res = bdk::chain_mixing_time(chain, bdk::DiscreteDistribution{{0.2, 0.2, 0.2, 0.2, 0.2}},
                                          0.25, 1000);
        bool decays = res.t_mix.has_value();
        if (decays) {
            for (std::size_t t = 1; t < res.worst_tv_by_t.size(); ++t)
                decays = decays && res.worst_tv_by_t[t] <= res.worst_tv_by_t[t - 1] + 1e-12;
        }
        bool submult = true;
        if (res.t_mix) {
            const int tm = *res.t_mix;
            for (int l = 1; l <= 3; ++l) {
                const std::size_t idx = static_cast<std::size_t>(l * tm) - 1;
                if (idx < res.worst_tv_by_t.size())
                    submult = submult && res.worst_tv_by_t[idx] <= std::pow(2.0, -l) + 1e-12;
            }
        }
        table.row("convergence decay", decays, "");
        table.row("submultiplicativity", submult, "");
    }

    std::cout << (table.all_ok ? "all mixing checks passed" : "mixing checks FAILED") << "\n";
    return table.all_ok ? 0 : static_cast<int>(bdk::ErrorFamily::numeric);
}

void cmd_report(const std::vector<std::string>& manifest_paths) {
    for (const auto& path : manifest_paths) {
        bdk::RunManifest m = bdk::load_manifest(path);
        std::cout << "== " << path << "\n";
        std::cout << "command: " << m.command << "\n";
        std::cout << "argv:";
        for (const auto& a : m.argv) std::cout << " " << a;
        std::cout << "\n";
        std::cout << "seed: " << m.seed << "\n";
        if (!m.checkpoint_checksum.empty())
            std::cout << "checkpoint checksum: " << m.checkpoint_checksum << "\n";
        for (const auto& b : m.boundary_checksums)
            std::cout << "boundary checksum: " << b << "\n";
        std::cout << "build: " << m.build_id << ", wall time " << fmt(m.wall_time_seconds)
                  << " s\n";
        for (const auto& o : m.outputs) std::cout << "output: " << o << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bdk - latent-space analysis and boundary-guided editing for toy diffusion models"};
    app.require_subcommand(1);

    std::string out_dir;
    if (const char* env = std::getenv("BDK_OUT_DIR")) out_dir = env;
    if (out_dir.empty()) out_dir = ".";
    std::uint64_t seed = 1;
    app.add_option("--out", out_dir, "output directory (default: $BDK_OUT_DIR or .)");
    app.add_option("--seed", seed, "root seed for all randomness");

    RunContext ctx;
    for (int i = 0; i < argc; ++i) ctx.argv.push_back(argv[i]);

    // subcommand callbacks run before the parent's, so each one resolves the
    // shared context itself
    auto begin_ctx = [&](const std::string& name, const CLI::App* sub) {
        ctx.command = name;
        ctx.out_dir = out_dir;
        ctx.seed = seed;
        ctx.started = std::chrono::steady_clock::now();
        std::filesystem::create_directories(ctx.out_dir);
        ctx.record_flags(sub);
    };

    // --- gen-data ---
    auto* gen = app.add_subcommand("gen-data", "generate a labeled sprite dataset");
    int gd_n = 1000, gd_side = 16, gd_channels = 1, gd_jitter = 1;
    double gd_amp = 0.05, gd_noise = 0.02;
    std::string gd_name = "dataset.bdkd";
    gen->add_option("--n", gd_n, "number of images");
    gen->add_option("--side", gd_side, "image side length");
    gen->add_option("--channels", gd_channels, "1 or 3");
    gen->add_option("--position-jitter", gd_jitter, "marker placement jitter, px");
    gen->add_option("--amplitude-jitter", gd_amp, "background level jitter");
    gen->add_option("--pixel-noise", gd_noise, "per-pixel noise amplitude");
    gen->add_option("--name", gd_name, "output file name");
    gen->callback([&] {
        begin_ctx("gen-data", gen);
        cmd_gen_data(ctx, gd_n, gd_side, gd_channels, gd_jitter, gd_amp, gd_noise, gd_name);
    });

    // --- train ---
    auto* train = app.add_subcommand("train", "train the noise predictor");
    std::string tr_data, tr_name = "checkpoint.bdkc";
    int tr_epochs = 150, tr_batch = 32, tr_hidden = 128, tr_bottleneck = 0, tr_embed = 32,
        tr_T = 100;
    double tr_lr = 0.02, tr_beta_start = 1e-4, tr_beta_end = 0.02;
    bool tr_passthrough = false;
    train->add_option("--data", tr_data, "dataset file")->required();
    train->add_option("--epochs", tr_epochs, "training epochs");
    train->add_option("--batch-size", tr_batch, "batch size");
    train->add_option("--lr", tr_lr, "learning rate");
    train->add_option("--hidden", tr_hidden, "hidden layer width");
    train->add_option("--bottleneck", tr_bottleneck, "bottleneck width (default d/8)");
    train->add_option("--time-embed", tr_embed, "time embedding width");
    train->add_option("--T", tr_T, "diffusion steps");
    train->add_option("--beta-start", tr_beta_start, "schedule start");
    train->add_option("--beta-end", tr_beta_end, "schedule end");
    train->add_flag("--passthrough", tr_passthrough,
                    "add a learned time-gated identity component to the estimate");
    train->add_option("--name", tr_name, "checkpoint file name");
    train->callback([&] {
        begin_ctx("train", train);
        cmd_train(ctx, tr_data, tr_epochs, tr_batch, tr_lr, tr_hidden, tr_bottleneck, tr_embed,
                  tr_T, tr_beta_start, tr_beta_end, tr_passthrough, tr_name);
    });

    // --- radius-scan ---
    auto* rs = app.add_subcommand("radius-scan", "radius along the denoising trajectory");
    std::string rs_ckpt, rs_data, rs_source = "sampled", rs_sampler = "stochastic";
    int rs_samples = 200, rs_stride = 10;
    rs->add_option("--checkpoint", rs_ckpt, "checkpoint file")->required();
    rs->add_option("--data", rs_data, "dataset file (for inverted starts)");
    rs->add_option("--source", rs_source, "sampled or inverted");
    rs->add_option("--sampler", rs_sampler, "stochastic or deterministic");
    rs->add_option("--samples", rs_samples, "number of start latents");
    rs->add_option("--stride", rs_stride, "recording stride in steps");
    rs->callback([&] {
        begin_ctx("radius-scan", rs);
        cmd_radius_scan(ctx, rs_ckpt, rs_data, rs_source, rs_sampler, rs_samples, rs_stride);
    });

    // --- find-mixing ---
    auto* fm = app.add_subcommand("find-mixing", "cross-validated mixing-step search");
    std::string fm_ckpt, fm_data;
    int fm_samples = 200, fm_stride = 10, fm_burn_in = 1;
    double fm_threshold = 4.0;
    bool fm_normalize = true, fm_drops_only = false, fm_relative = false;
    fm->add_option("--checkpoint", fm_ckpt, "checkpoint file")->required();
    fm->add_option("--data", fm_data, "dataset file")->required();
    fm->add_option("--samples", fm_samples, "samples per combo");
    fm->add_option("--stride", fm_stride, "scan stride");
    fm->add_option("--threshold", fm_threshold, "radius-shift threshold");
    fm->add_flag("--normalize,!--no-normalize", fm_normalize,
                 "rescale shifts to a 100-step stride before thresholding");
    fm->add_option("--burn-in", fm_burn_in,
                   "leading strides excluded from detection (chain re-equilibration)");
    fm->add_flag("--drops-only", fm_drops_only, "ignore radius increases during detection");
    fm->add_flag("--relative", fm_relative,
                 "threshold as a fraction of the combo's reference radius");
    fm->callback([&] {
        begin_ctx("find-mixing", fm);
        cmd_find_mixing(ctx, fm_ckpt, fm_data, fm_samples, fm_stride, fm_threshold, fm_normalize,
                        fm_burn_in, fm_drops_only, fm_relative);
    });

    // --- invert ---
    auto* inv = app.add_subcommand("invert", "invert an image to a latent");
    std::string inv_ckpt, inv_data, inv_format = "csv";
    int inv_index = 0, inv_tend = 0, inv_steps = 0;
    inv->add_option("--checkpoint", inv_ckpt, "checkpoint file")->required();
    inv->add_option("--data", inv_data, "dataset file")->required();
    inv->add_option("--index", inv_index, "image index");
    inv->add_option("--t-end", inv_tend, "target step (default T)");
    inv->add_option("--steps-inv", inv_steps, "inversion steps (default t-end)");
    inv->add_option("--format", inv_format, "csv or bin");
    inv->callback([&] {
        begin_ctx("invert", inv);
        cmd_invert(ctx, inv_ckpt, inv_data, inv_index, inv_tend, inv_steps, inv_format);
    });

    // --- reconstruct ---
    auto* rec = app.add_subcommand("reconstruct", "invert-then-denoise round trip");
    std::string rec_ckpt, rec_data;
    int rec_count = 100, rec_sinv = 0, rec_sgen = 0;
    rec->add_option("--checkpoint", rec_ckpt, "checkpoint file")->required();
    rec->add_option("--data", rec_data, "dataset file")->required();
    rec->add_option("--count", rec_count, "number of images");
    rec->add_option("--steps-inv", rec_sinv, "inversion steps (default T)");
    rec->add_option("--steps-gen", rec_sgen, "denoise steps (default T)");
    rec->callback([&] {
        begin_ctx("reconstruct", rec);
        cmd_reconstruct(ctx, rec_ckpt, rec_data, rec_count, rec_sinv, rec_sgen);
    });

    // --- fit-boundary ---
    auto* fb = app.add_subcommand("fit-boundary", "fit a semantic hyperplane at t_m");
    std::string fb_ckpt, fb_data, fb_attr = "marker", fb_space = "epsilon";
    int fb_tm = 0, fb_latents = 100, fb_epochs = 60;
    double fb_lambda = 1e-4;
    bool fb_nobias = false;
    fb->add_option("--checkpoint", fb_ckpt, "checkpoint file")->required();
    fb->add_option("--data", fb_data, "dataset file")->required();
    fb->add_option("--attribute", fb_attr, "attribute to separate");
    fb->add_option("--tm", fb_tm, "mixing step")->required();
    fb->add_option("--space", fb_space, "epsilon, h, or both");
    fb->add_option("--latents", fb_latents, "number of labeled images to invert");
    fb->add_option("--epochs", fb_epochs, "SVM epochs");
    fb->add_option("--lambda", fb_lambda, "SVM regularization");
    fb->add_flag("--no-bias", fb_nobias, "plain n.x rule without a bias term");
    fb->callback([&] {
        begin_ctx("fit-boundary", fb);
        cmd_fit_boundary(ctx, fb_ckpt, fb_data, fb_attr, fb_tm, fb_space, fb_latents, fb_epochs,
                         fb_lambda, fb_nobias);
    });

    // --- eval-boundary ---
    auto* eb = app.add_subcommand("eval-boundary", "accuracy of a stored boundary");
    std::string eb_ckpt, eb_data, eb_boundary;
    int eb_latents = 100, eb_skip = 0;
    eb->add_option("--checkpoint", eb_ckpt, "checkpoint file")->required();
    eb->add_option("--data", eb_data, "dataset file")->required();
    eb->add_option("--boundary", eb_boundary, "boundary file")->required();
    eb->add_option("--latents", eb_latents, "number of images to evaluate");
    eb->add_option("--skip", eb_skip, "skip this many images first");
    eb->callback([&] {
        begin_ctx("eval-boundary", eb);
        cmd_eval_boundary(ctx, eb_ckpt, eb_data, eb_boundary, eb_latents, eb_skip);
    });

    // --- edit ---
    auto* ed = app.add_subcommand("edit", "boundary-guided edit of a real image");
    std::string ed_ckpt, ed_data, ed_mode = "set-distance", ed_dump = "none";
    std::vector<std::string> ed_boundaries;
    std::vector<double> ed_zetas;
    int ed_index = 0, ed_tm = 0, ed_sinv = 0, ed_sgen = 0, ed_hiter = 1;
    ed->add_option("--checkpoint", ed_ckpt, "checkpoint file")->required();
    ed->add_option("--data", ed_data, "dataset file")->required();
    ed->add_option("--index", ed_index, "image index");
    ed->add_option("--boundary", ed_boundaries, "boundary file (repeat for epsilon and h)")
        ->required();
    ed->add_option("--zeta", ed_zetas, "editing strength per boundary")->required();
    ed->add_option("--mode", ed_mode, "set-distance or additive");
    ed->add_option("--tm", ed_tm, "mixing step")->required();
    ed->add_option("--steps-inv", ed_sinv, "inversion steps (default tm)");
    ed->add_option("--steps-gen", ed_sgen, "stochastic steps (default tm)");
    ed->add_option("--h-iterative", ed_hiter, "inject edited h for this many steps");
    ed->add_option("--dump-trajectory", ed_dump, "csv, bin, or none");
    ed->callback([&] {
        begin_ctx("edit", ed);
        cmd_edit(ctx, ed_ckpt, ed_data, ed_index, ed_boundaries, ed_zetas, ed_mode, ed_tm, ed_sinv,
                 ed_sgen, ed_hiter, ed_dump);
    });

    // --- sample ---
    auto* sm = app.add_subcommand("sample", "unconditional synthesis with semantic control");
    std::string sm_ckpt, sm_mode = "set-distance";
    std::vector<std::string> sm_boundaries;
    std::vector<double> sm_zetas;
    int sm_tm = 0, sm_stop = 0, sm_sgen = 0, sm_count = 8, sm_hiter = 1, sm_side = 16,
        sm_channels = 1;
    sm->add_option("--checkpoint", sm_ckpt, "checkpoint file")->required();
    sm->add_option("--boundary", sm_boundaries, "boundary file")->required();
    sm->add_option("--zeta", sm_zetas, "editing strength per boundary")->required();
    sm->add_option("--mode", sm_mode, "set-distance or additive");
    sm->add_option("--tm", sm_tm, "mixing step")->required();
    sm->add_option("--steps-top", sm_stop, "deterministic steps T -> tm");
    sm->add_option("--steps-gen", sm_sgen, "stochastic steps tm -> 0");
    sm->add_option("--count", sm_count, "number of samples");
    sm->add_option("--h-iterative", sm_hiter, "inject edited h for this many steps");
    sm->add_option("--side", sm_side, "image side for the output grid");
    sm->add_option("--channels", sm_channels, "channels for the output grid");
    sm->callback([&] {
        begin_ctx("sample", sm);
        cmd_sample(ctx, sm_ckpt, sm_boundaries, sm_zetas, sm_mode, sm_tm, sm_stop, sm_sgen,
                   sm_count, sm_hiter, sm_side, sm_channels);
    });

    // --- sweep ---
    auto* sw = app.add_subcommand("sweep", "editing strength sweep with oracle scores");
    std::string sw_ckpt, sw_data, sw_boundary;
    int sw_index = 0, sw_tm = 0, sw_steps = 7, sw_sinv = 0, sw_sgen = 0;
    double sw_min = -3.0, sw_max = 3.0, sw_degr = 0.45;
    sw->add_option("--checkpoint", sw_ckpt, "checkpoint file")->required();
    sw->add_option("--data", sw_data, "dataset file")->required();
    sw->add_option("--index", sw_index, "image index");
    sw->add_option("--boundary", sw_boundary, "epsilon boundary file")->required();
    sw->add_option("--zeta-min", sw_min, "grid start");
    sw->add_option("--zeta-max", sw_max, "grid end");
    sw->add_option("--zeta-steps", sw_steps, "grid points");
    sw->add_option("--tm", sw_tm, "mixing step")->required();
    sw->add_option("--steps-inv", sw_sinv, "inversion steps (default tm)");
    sw->add_option("--steps-gen", sw_sgen, "stochastic steps (default tm)");
    sw->add_option("--degradation-threshold", sw_degr, "nearest-neighbor rmse flag level");
    sw->callback([&] {
        begin_ctx("sweep", sw);
        cmd_sweep(ctx, sw_ckpt, sw_data, sw_index, sw_boundary, sw_min, sw_max, sw_steps, sw_tm,
                  sw_sinv, sw_sgen, sw_degr);
    });

    // --- verify-geometry / verify-mixing ---
    int verify_rc = 0;
    auto* vg = app.add_subcommand("verify-geometry", "high-dimensional geometry checks");
    vg->callback([&] {
        begin_ctx("verify-geometry", vg);
        verify_rc = cmd_verify_geometry(seed);
    });
    auto* vm = app.add_subcommand("verify-mixing", "total-variation and mixing-time checks");
    vm->callback([&] {
        begin_ctx("verify-mixing", vm);
        verify_rc = cmd_verify_mixing(seed);
    });

    // --- report ---
    auto* rp = app.add_subcommand("report", "print run manifests");
    std::vector<std::string> rp_manifests;
    rp->add_option("--manifest", rp_manifests, "manifest file(s)")->required();
    rp->callback([&] {
        begin_ctx("report", rp);
        cmd_report(rp_manifests);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(bdk::ErrorFamily::validation);
    } catch (const bdk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(bdk::ErrorFamily::numeric);
    }

    if (verify_rc != 0) return verify_rc;
    const bool wrote_something = !ctx.command.empty();
    if (wrote_something) {
        try {
            ctx.finish();
        } catch (const bdk::Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return e.exit_code();
        }
    }
    return 0;
}
