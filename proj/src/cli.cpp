#include "tlidar/cli.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tlidar/bench.hpp"
#include "tlidar/errors.hpp"
#include "tlidar/fsa.hpp"
#include "tlidar/image_io.hpp"
#include "tlidar/mask_distill.hpp"
#include "tlidar/sequence_io.hpp"
#include "tlidar/smsa.hpp"
#include "tlidar/synthetic.hpp"
#include "tlidar/tiaf.hpp"
#include "tlidar/voxel_grid.hpp"

namespace tlidar {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct SourceOptions {
  std::string sequence;
  std::string synth;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App& cmd) {
    auto* seq = cmd.add_option("--sequence", sequence, "SemanticKITTI-layout sequence directory");
    auto* syn = cmd.add_option("--synth", synth,
                               "Synthetic scene spec (JSON path, or 'kitti' for the built-in scene)");
    seq->excludes(syn);
    cmd.add_option("--seed", seed, "Seed (overrides the synthetic spec seed)");
  }

  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }

  /// Loads the frames needed for [first, last]; synthetic scenes are generated whole.
  Sequence load(FrameIndex first = 0, FrameIndex last = -1) const {
    if (!sequence.empty()) {
      SequenceReader reader(sequence);
      const FrameIndex end = last < 0 ? reader.frame_count() - 1 : std::min(last, reader.frame_count() - 1);
      Sequence seq;
      seq.calib = reader.calib();
      for (FrameIndex k = std::max<FrameIndex>(first, 0); k <= end; ++k) {
        seq.frames.push_back(reader.read_frame(k));
      }
      if (seq.frames.empty()) throw InvalidInputError("no frames selected from " + sequence);
      return seq;
    }
    if (synth.empty()) throw UsageError("one of --sequence or --synth is required");
    SyntheticSceneSpec spec = synth == "kitti" ? kitti_like_scene_spec() : load_synthetic_spec(synth);
    if (seed) spec.seed = *seed;
    return generate_synthetic(spec);
  }
};

FrameIndex resolve_t(std::optional<FrameIndex> t, const Sequence& seq) {
  return t.value_or(seq.frames.back().index);
}

/// Sequence-relative frame count for --sequence sources, needed before loading.
FrameIndex sequence_last_index(const SourceOptions& src) {
  if (src.sequence.empty()) return -1;
  return SequenceReader(src.sequence).frame_count() - 1;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(out_path, std::ios::trunc);
  if (!file) throw NotFoundError("cannot create " + out_path);
  file << text;
}

void check_format(const std::string& format) {
  if (format != "table" && format != "machine") {
    throw UsageError("--format must be table or machine, got '" + format + "'");
  }
}

// Voxel features of an aggregated cloud: offset from the voxel center (in
// voxel units) and intensity, passed through a seeded fixed kernel.
VoxelFeatureMap aggregated_feature_map(const AggregatedCloud& agg, double voxel_size,
                                       std::uint64_t seed) {
  const auto& pts = agg.labeled.cloud.xyz;
  const VoxelFeatureMap grid(voxel_size, Vec3::Zero(), 4);
  FeatureMatrix features(static_cast<Eigen::Index>(pts.size()), 4);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 offset = (pts[i] - grid.center(grid.coord_of(pts[i]))) / voxel_size;
    features.row(static_cast<Eigen::Index>(i)) << offset.x(), offset.y(), offset.z(),
        agg.labeled.cloud.intensity[i];
  }
  return apply_fixed_kernel(voxelize(pts, features, voxel_size), FixedKernel::random(4, 4, seed));
}

void write_cloud(const std::string& prefix, const AggregatedCloud& agg) {
  write_velodyne_bin(prefix + ".bin", agg.labeled.cloud);
  write_label_file(prefix + ".label", agg.labeled.semantic, agg.labeled.instance);
}

// ---------------------------------------------------------------------------

struct SynthCommand {
  std::string spec_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> frames;
  std::optional<std::size_t> points;
  bool print_spec = false;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Generate a synthetic labeled sequence");
    cmd->add_option("--spec", spec_path, "Scene spec JSON (default: built-in KITTI-like scene)");
    cmd->add_option("--out", out_dir, "Output sequence directory");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--frames", frames, "Override frame count");
    cmd->add_option("--points", points, "Override points per frame");
    cmd->add_flag("--print-spec", print_spec, "Print the effective spec as JSON");
  }

  int run(std::ostream& out) const {
    SyntheticSceneSpec spec = spec_path.empty() ? kitti_like_scene_spec() : load_synthetic_spec(spec_path);
    if (seed) spec.seed = *seed;
    if (frames) spec.frame_count = *frames;
    if (points) spec.points_per_frame = *points;
    if (print_spec) out << synthetic_spec_to_json(spec);
    if (out_dir.empty()) {
      if (print_spec) return 0;
      throw UsageError("synth needs --out <dir> (or --print-spec)");
    }
    const Sequence seq = generate_synthetic(spec);
    write_sequence(out_dir, seq);
    out << "wrote " << seq.frames.size() << " frames x " << spec.points_per_frame << " points to "
        << out_dir << "\n";
    return 0;
  }
};

struct AggregateCommand {
  SourceOptions src;
  std::optional<FrameIndex> t;
  int window = 16;
  std::string strategy = "fsa";
  int step = 2;
  std::string division = "division3";
  double error_rate = 0.0;
  std::string out_path;
  std::string format = "table";
  std::string cloud_prefix;
  std::string voxel_dump;
  double voxel_size = 0.2;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("aggregate", "Aggregate temporal frames into frame t");
    src.add_to(*cmd);
    cmd->add_option("--t", t, "Present frame index (default: last)");
    cmd->add_option("--window", window, "Temporal window in frames");
    cmd->add_option("--strategy", strategy, "direct | stepped | fsa");
    cmd->add_option("--step", step, "Step for the stepped strategy");
    cmd->add_option("--division", division, "Division preset name or JSON path");
    cmd->add_option("--error-rate", error_rate,
                    "Label corruption rate for pseudo group masks (0 = ground-truth masks)");
    cmd->add_option("--out", out_path, "Report path (default stdout)");
    cmd->add_option("--format", format, "table | machine");
    cmd->add_option("--write-cloud", cloud_prefix, "Write <prefix>.bin/.label of the result");
    cmd->add_option("--dump-voxels", voxel_dump, "Write a voxel feature map dump of the result");
    cmd->add_option("--voxel-size", voxel_size, "Voxel size for --dump-voxels");
  }

  int run(std::ostream& out) const {
    check_format(format);
    if (window < 0) throw UsageError("--window must be >= 0");
    const GroupDivision div = resolve_division(division);
    Strategy strat;
    if (strategy == "direct") {
      strat = Strategy::direct();
    } else if (strategy == "stepped") {
      strat = Strategy::stepped(step);
    } else if (strategy == "fsa") {
      strat = Strategy::fsa(div);
    } else {
      throw UsageError("unknown strategy '" + strategy + "'; valid: direct, stepped, fsa");
    }
    const FrameIndex last = t ? *t : sequence_last_index(src);
    const Sequence seq = src.load(last < 0 ? 0 : last - window, last);
    const FrameIndex present = resolve_t(t, seq);
    const std::uint64_t seed = src.seed_or(0);

    AggregatedCloud agg;
    if (strat.kind == Strategy::Kind::kFsa && error_rate > 0.0) {
      std::vector<SequenceFrame> pseudo;
      for (const auto& f : seq.frames) pseudo.push_back(corrupt_labels(f, error_rate, seed));
      GroupDivision d = div;
      d.window = window;
      agg = aggregate_fsa(seq.frames, present, d, pseudo);
    } else {
      agg = strat.run(seq.frames, present, window);
    }

    std::map<FrameIndex, std::size_t> per_frame;
    for (FrameIndex f : agg.source_frame) ++per_frame[f];
    const std::size_t present_points = per_frame[present];

    if (!cloud_prefix.empty()) write_cloud(cloud_prefix, agg);
    if (!voxel_dump.empty()) write_voxel_map(voxel_dump, aggregated_feature_map(agg, voxel_size, seed));

    std::ostringstream report;
    if (format == "machine") {
      ordered_json j;
      j["t"] = present;
      j["strategy"] = strat.name();
      j["division"] = strat.kind == Strategy::Kind::kFsa ? div.name : "";
      j["window"] = window;
      j["error_rate"] = error_rate;
      j["points"] = agg.size();
      j["present_points"] = present_points;
      j["temporal_points"] = agg.size() - present_points;
      ordered_json frames = ordered_json::array();
      for (auto it = per_frame.rbegin(); it != per_frame.rend(); ++it) {
        frames.push_back({{"frame", it->first}, {"points", it->second}});
      }
      j["source_frames"] = frames;
      report << j.dump() << "\n";
    } else {
      report << "strategy " << strat.name();
      if (strat.kind == Strategy::Kind::kFsa) report << " (" << div.name << ")";
      report << ", t = " << present << ", window = " << window << "\n";
      report << "aggregated points: " << agg.size() << " (present " << present_points
             << ", temporal " << agg.size() - present_points << ")\n";
      for (auto it = per_frame.rbegin(); it != per_frame.rend(); ++it) {
        report << "  frame " << it->first << ": " << it->second << "\n";
      }
    }
    emit(report.str(), out_path, out);
    return 0;
  }
};

struct LiftCommand {
  SourceOptions src;
  std::optional<FrameIndex> t;
  int image_step = kDefaultImageStep;
  int image_window = kDefaultImageWindow;
  int scales = 3;
  double voxel_size = 0.2;
  int channels = 3;
  std::string images_dir;
  std::string kernel = "random";
  std::string division = "division3";
  int window = 16;
  std::string dump_prefix;
  std::string out_path;
  std::string format = "table";
  bool bilinear = false;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("lift", "Lift temporal image features and fuse them into voxels");
    src.add_to(*cmd);
    cmd->add_option("--t", t, "Present frame index (default: last)");
    cmd->add_option("--image-step", image_step, "Temporal image step");
    cmd->add_option("--image-window", image_window, "Temporal image window");
    cmd->add_option("--scales", scales, "Number of fused voxel scales");
    cmd->add_option("--voxel-size", voxel_size, "Scale-0 voxel size in meters");
    cmd->add_option("--channels", channels, "Channels of synthetic feature images");
    cmd->add_option("--images", images_dir,
                    "Directory of per-frame images NNNNNN.{ppm,pgm,tlfm} (default: synthetic)");
    cmd->add_option("--kernel", kernel, "random | identity");
    cmd->add_option("--division", division, "Division for the LiDAR aggregation that gathers features");
    cmd->add_option("--window", window, "LiDAR window for the gather target");
    cmd->add_option("--dump-prefix", dump_prefix, "Write <prefix>_s<k>.tlvx per fused scale");
    cmd->add_option("--out", out_path, "Report path (default stdout)");
    cmd->add_option("--format", format, "table | machine");
    cmd->add_flag("--bilinear", bilinear, "Bilinear pixel sampling instead of nearest");
  }

  ImageFeatureMap image_for(const SequenceFrame& f, const CameraCalib& calib, std::uint64_t seed) const {
    if (images_dir.empty()) return synthetic_feature_image(calib, channels, f.index, seed);
    for (const char* ext : {".ppm", ".pgm", ".tlfm"}) {
      const fs::path p = fs::path(images_dir) / (frame_stem(f.index) + ext);
      if (fs::exists(p)) return read_image_features(p);
    }
    throw NotFoundError("no image for frame " + std::to_string(f.index) + " in " + images_dir);
  }

  int run(std::ostream& out) const {
    check_format(format);
    if (kernel != "random" && kernel != "identity") throw UsageError("--kernel must be random or identity");
    if (image_step < 1 || image_window < 0 || scales < 1) {
      throw UsageError("need --image-step >= 1, --image-window >= 0, --scales >= 1");
    }
    const GroupDivision div = resolve_division(division);
    const FrameIndex last = t ? *t : sequence_last_index(src);
    const int reach = std::max(image_window, window);
    const Sequence seq = src.load(last < 0 ? 0 : last - reach, last);
    const FrameIndex present = resolve_t(t, seq);
    const std::uint64_t seed = src.seed_or(0);

    const FrameWindow win(seq.frames);
    std::vector<SequenceFrame> used;
    std::vector<ImageFeatureMap> images;
    used.push_back(win.at(present));
    for (FrameIndex o : source_frames(present, image_window, image_step, win.first_index())) {
      used.insert(used.begin(), win.at(o));
    }
    for (const auto& f : used) images.push_back(image_for(f, seq.calib, seed));

    LiftOptions lift;
    lift.sampling = bilinear ? PixelSampling::kBilinear : PixelSampling::kNearest;
    const PointImageFeatures agg =
        aggregate_image_features(used, images, seq.calib, present, image_step, image_window, lift);
    FuseOptions fuse;
    fuse.scales = scales;
    fuse.voxel_size = voxel_size;
    fuse.seed = seed;
    fuse.identity_kernel = kernel == "identity";
    const auto fused = fuse_to_voxels(agg, fuse);

    GroupDivision d = div;
    d.window = window;
    const AggregatedCloud lidar = aggregate_fsa(seq.frames, present, d);
    const FeatureMatrix gathered = temporal_multimodal_gather(lidar, fused);
    std::size_t covered = 0;
    for (Eigen::Index i = 0; i < gathered.rows(); ++i) covered += gathered.row(i).any() ? 1 : 0;
    const LabelImage labels = project_labels_to_image(win.at(present), seq.calib);

    std::map<FrameIndex, std::size_t> per_frame;
    for (FrameIndex f : agg.source_frame) ++per_frame[f];
    if (!dump_prefix.empty()) {
      for (std::size_t s = 0; s < fused.size(); ++s) {
        write_voxel_map(dump_prefix + "_s" + std::to_string(s) + ".tlvx", fused[s]);
      }
    }

    std::ostringstream report;
    if (format == "machine") {
      ordered_json j;
      j["t"] = present;
      j["image_step"] = image_step;
      j["image_window"] = image_window;
      j["present_in_fov"] = per_frame[present];
      j["lifted_points"] = agg.size();
      ordered_json frames = ordered_json::array();
      for (auto it = per_frame.rbegin(); it != per_frame.rend(); ++it) {
        frames.push_back({{"frame", it->first}, {"in_fov", it->second}});
      }
      j["source_frames"] = frames;
      ordered_json voxels = ordered_json::array();
      for (const auto& m : fused) voxels.push_back(m.size());
      j["voxels_per_scale"] = voxels;
      j["gather_points"] = lidar.size();
      j["gather_width"] = gathered.cols();
      j["gather_covered"] = covered;
      j["labeled_pixels"] = labels.labeled_count();
      report << j.dump() << "\n";
    } else {
      report << "t = " << present << ", image step " << image_step << ", window " << image_window << "\n";
      report << "lifted points: " << agg.size() << " (present in-FOV " << per_frame[present] << ")\n";
      for (auto it = per_frame.rbegin(); it != per_frame.rend(); ++it) {
        report << "  frame " << it->first << ": " << it->second << " in FOV\n";
      }
      for (std::size_t s = 0; s < fused.size(); ++s) {
        report << "scale " << s << ": " << fused[s].size() << " voxels (size "
               << fused[s].voxel_size() << " m)\n";
      }
      report << "gathered " << gathered.cols() << "-wide features for " << lidar.size()
             << " LiDAR points, " << covered << " with image support\n";
      report << "2D supervision: " << labels.labeled_count() << " labeled pixels\n";
    }
    emit(report.str(), out_path, out);
    return 0;
  }
};

struct DistillCommand {
  std::string student;
  std::string teacher;
  std::string norm = "mean";
  std::uint64_t seed = 0;  // accepted for a uniform interface; the loss is deterministic

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("distill", "Masked distillation loss between two voxel map dumps");
    cmd->add_option("--student", student, "Student voxel map dump")->required();
    cmd->add_option("--teacher", teacher, "Teacher voxel map dump")->required();
    cmd->add_option("--norm", norm, "mean (per-voxel L2, averaged) | frobenius");
    cmd->add_option("--seed", seed, "Ignored; distillation draws no random numbers");
  }

  int run(std::ostream& out) const {
    DistillNorm n;
    if (norm == "mean") {
      n = DistillNorm::kPerVoxelMean;
    } else if (norm == "frobenius") {
      n = DistillNorm::kFrobenius;
    } else {
      throw UsageError("--norm must be mean or frobenius");
    }
    const auto s = read_voxel_map(student);
    const auto t = read_voxel_map(teacher);
    const auto sel = shared_selection(s, t);
    const double loss = distill_loss(s, t, sel, n);
    ordered_json j;
    j["student_voxels"] = s.size();
    j["teacher_voxels"] = t.size();
    j["shared_voxels"] = sel.size();
    j["norm"] = norm;
    j["loss"] = loss;
    out << j.dump() << "\n";
    return 0;
  }
};

struct AugmentCommand {
  SourceOptions src;
  std::optional<FrameIndex> t;
  int window = 16;
  int step = 1;
  std::string direction;
  std::optional<InstanceId> instance;
  double speed_min = 0.2, speed_max = 1.0;
  double anchor_radius = 3.0, coverage = 2.0;
  double threshold = kDefaultMotionThreshold;
  std::string pairs_path;
  std::string out_dir;
  bool vertical_rule = false;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("augment", "Static-moving switch of one instance");
    src.add_to(*cmd);
    cmd->add_option("--t", t, "Present frame index (default: last)");
    cmd->add_option("--window", window, "Temporal window");
    cmd->add_option("--step", step, "Sampling step of temporal parts");
    cmd->add_option("--switch", direction, "static-to-moving | moving-to-static")->required();
    cmd->add_option("--instance", instance, "Instance id (default: first eligible)");
    cmd->add_option("--speed-min", speed_min, "Minimum offset per step (m)");
    cmd->add_option("--speed-max", speed_max, "Maximum offset per step (m)");
    cmd->add_option("--anchor-radius", anchor_radius, "Anchor ring radius (m)");
    cmd->add_option("--coverage", coverage, "Anchor coverage radius (m)");
    cmd->add_option("--threshold", threshold, "Motion classification threshold (m)");
    cmd->add_option("--pairs", pairs_path, "Static/moving class pair table JSON");
    cmd->add_flag("--width-vs-height", vertical_rule,
                  "Pick the motion axis from x extent vs vertical extent");
    cmd->add_option("--out", out_dir, "Write the augmented sequence to this directory");
  }

  int run(std::ostream& out) const {
    MotionState target;
    if (direction == "static-to-moving") {
      target = MotionState::kMoving;
    } else if (direction == "moving-to-static") {
      target = MotionState::kStatic;
    } else {
      throw UsageError("--switch must be static-to-moving or moving-to-static");
    }
    if (step < 1 || window < 1) throw UsageError("--step and --window must be >= 1");
    const ClassPairTable table =
        pairs_path.empty() ? ClassPairTable::semantic_kitti() : ClassPairTable::load(pairs_path);
    // The augmented sequence is written whole, so load every frame.
    Sequence seq = src.load();
    const FrameIndex present = resolve_t(t, seq);
    const AggregatedCloud agg = aggregate_stepped(seq.frames, present, window, step);

    const MotionState source = target == MotionState::kMoving ? MotionState::kStatic : MotionState::kMoving;
    std::optional<InstanceTrack> track;
    if (instance) {
      track = extract_track(agg, *instance);
    } else {
      for (InstanceId id : instance_ids(agg)) {
        try {
          auto candidate = extract_track(agg, id);
          if (classify_motion(candidate, threshold) == source) {
            track = std::move(candidate);
            break;
          }
        } catch (const NotAugmentableError&) {
        }
      }
      if (!track) {
        throw NotAugmentableError(std::string("no ") + to_string(source) +
                                  " instance with at least two temporal parts at frame " +
                                  std::to_string(present));
      }
    }
    const double before = max_centroid_spread(*track);
    InstanceTrack switched;
    if (target == MotionState::kStatic) {
      switched = moving_to_static(*track, threshold);
    } else {
      StaticToMovingOptions opts;
      opts.speed = {speed_min, speed_max};
      opts.motion_threshold = threshold;
      opts.direction = vertical_rule ? DirectionRule::kWidthVsHeight : DirectionRule::kHorizontalExtents;
      const auto anchors = anchor_ring(track->parts[0].centroid, anchor_radius, 8, coverage);
      switched = static_to_moving(*track, scene_without_track(agg, *track), anchors,
                                  src.seed_or(0), opts);
    }
    const AggregatedCloud augmented = apply_switch(agg, *track, switched, table, target);

    if (!out_dir.empty()) {
      // Push moved points back into their source frames.
      const FrameWindow win(seq.frames);
      for (const auto& part : switched.parts) {
        auto& frame = seq.frames[static_cast<std::size_t>(&win.at(part.frame) - seq.frames.data())];
        const Pose to_source = win.relative_pose(part.frame, present);
        for (std::size_t r : part.rows) {
          const std::uint32_t row = augmented.source_point[r];
          frame.labeled.cloud.xyz[row] = to_source.apply(augmented.labeled.cloud.xyz[r]);
          frame.labeled.semantic[row] = augmented.labeled.semantic[r];
        }
      }
      write_sequence(out_dir, seq);
    }

    ordered_json j;
    j["t"] = present;
    j["instance"] = track->instance_id;
    j["class"] = track->class_id;
    j["switch"] = direction;
    j["parts"] = track->parts.size();
    j["points"] = track->point_count();
    j["spread_before"] = before;
    j["spread_after"] = max_centroid_spread(switched);
    j["state_after"] = to_string(classify_motion(switched, threshold));
    j["total_points"] = augmented.size();
    out << j.dump() << "\n";
    return 0;
  }
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct BenchCommand {
  SourceOptions src;
  std::string strategies = "direct,fsa";
  std::string division = "division3";
  int window = 16;
  std::string windows;
  FrameIndex t_first = -1;
  FrameIndex t_last = -1;
  int repeats = 3;
  std::size_t bytes_per_point = kDefaultBytesPerPoint;
  std::string out_path;
  std::string format = "table";

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("bench", "Point count / memory proxy / latency per strategy");
    src.add_to(*cmd);
    cmd->add_option("--strategies", strategies, "Comma list of direct, stepped:N, fsa");
    cmd->add_option("--division", division, "Division preset name or JSON path");
    cmd->add_option("--window", window, "Temporal window");
    cmd->add_option("--windows", windows, "Comma list of windows: sweep the first strategy");
    cmd->add_option("--t-first", t_first, "First present frame (default: window)");
    cmd->add_option("--t-last", t_last, "Last present frame (default: last)");
    cmd->add_option("--repeats", repeats, "Timing repeats (median reported)");
    cmd->add_option("--bytes-per-point", bytes_per_point,
                    "Memory proxy bytes per point (16 = xyz+intensity; 20 adds the label)");
    cmd->add_option("--out", out_path, "Report path (default stdout)");
    cmd->add_option("--format", format, "table | machine");
  }

  int run(std::ostream& out) const {
    check_format(format);
    const GroupDivision div = resolve_division(division);
    std::vector<Strategy> strats;
    for (const auto& s : split_csv(strategies)) strats.push_back(Strategy::parse(s, div));
    if (strats.empty()) throw UsageError("--strategies is empty");
    std::vector<int> sweep;
    for (const auto& w : split_csv(windows)) {
      try {
        sweep.push_back(std::stoi(w));
      } catch (const std::exception&) {
        throw UsageError("bad window '" + w + "' in --windows");
      }
    }
    const int reach = sweep.empty() ? window : *std::max_element(sweep.begin(), sweep.end());
    const FrameIndex first = t_first < 0 ? reach : t_first;
    const Sequence seq = src.load(std::max<FrameIndex>(0, first - reach), t_last);
    BenchOptions opts;
    opts.t_first = first;
    opts.t_last = t_last;
    opts.window = window;
    opts.repeats = repeats;
    opts.bytes_per_point = bytes_per_point;
    const BenchReport report = sweep.empty() ? run_bench(seq.frames, strats, opts)
                                             : run_window_sweep(seq.frames, strats.front(), sweep, opts);
    emit(format == "machine" ? report.to_machine() : report.to_table(), out_path, out);
    return 0;
  }
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal LiDAR aggregation and augmentation toolkit", "tlidar"};
  app.require_subcommand(0, 1);
  SynthCommand synth;
  AggregateCommand aggregate;
  LiftCommand lift;
  DistillCommand distill;
  AugmentCommand augment;
  BenchCommand bench;
  synth.attach(app);
  aggregate.attach(app);
  lift.attach(app);
  distill.attach(app);
  augment.attach(app);
  bench.attach(app);

  if (argc <= 1) {
    err << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }
  try {
    if (app.got_subcommand("synth")) return synth.run(out);
    if (app.got_subcommand("aggregate")) return aggregate.run(out);
    if (app.got_subcommand("lift")) return lift.run(out);
    if (app.got_subcommand("distill")) return distill.run(out);
    if (app.got_subcommand("augment")) return augment.run(out);
    if (app.got_subcommand("bench")) return bench.run(out);
    err << app.help();
    return 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace tlidar
