#include "cms/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "cms/certify.hpp"
#include "cms/errors.hpp"
#include "cms/log.hpp"
#include "cms/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cms {

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

fs::path prepare_out(const RunConfig& config) {
  fs::path out(config.out);
  fs::create_directories(out);
  return out;
}

void write_sidecar(const RunConfig& config, const fs::path& artifact) {
  write_text(artifact.string() + ".config.json", config_to_json(config));
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(field, "expected an array of 3 numbers");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception&) {
    throw ConfigError(field, "expected an array of 3 numbers");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

void save_manifest(const Manifest& m, const std::string& path) {
  json j;
  j["version"] = 1;
  j["classes"] = json::array();
  for (const auto& c : m.classes)
    j["classes"].push_back({{"class_id", c.class_id},
                            {"shape", std::string(to_string(c.shape))},
                            {"color", {c.color[0], c.color[1], c.color[2]}},
                            {"ply", c.ply},
                            {"points", c.points}});
  j["poses"] = json::array();
  for (const auto& p : m.poses)
    j["poses"].push_back({{"pose_id", p.pose_id},
                          {"class_id", p.class_id},
                          {"split", std::string(to_string(p.split))},
                          {"yaw_deg", p.angles.yaw_deg},
                          {"pitch_deg", p.angles.pitch_deg},
                          {"roll_deg", p.angles.roll_deg},
                          {"radius_m", p.angles.radius},
                          {"rotvec", vec_json(p.pose.rotvec)},
                          {"translation_m", vec_json(p.pose.translation)}});
  write_text(path, j.dump(1));
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scene.manifest", "cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("manifest", std::string("invalid JSON: ") + e.what());
  }
  const fs::path base = fs::path(path).parent_path();
  Manifest m;
  if (!j.contains("classes") || !j["classes"].is_array() || j["classes"].empty())
    throw ConfigError("manifest.classes", "expected a non-empty array");
  for (std::size_t i = 0; i < j["classes"].size(); ++i) {
    const auto& c = j["classes"][i];
    const std::string field = "manifest.classes[" + std::to_string(i) + "]";
    ManifestClass mc;
    try {
      mc.class_id = c.at("class_id").get<std::uint32_t>();
      mc.shape = parse_shape(c.at("shape").get<std::string>());
      mc.color = c.at("color").get<std::array<float, 3>>();
      mc.ply = c.at("ply").get<std::string>();
      mc.points = c.value("points", std::size_t{0});
    } catch (const json::exception& e) {
      throw ConfigError(field, std::string("bad or missing field: ") + e.what());
    } catch (const InvalidArgument& e) {
      throw ConfigError(field + ".shape", e.what());
    }
    if (mc.class_id != i) throw ConfigError(field + ".class_id", "class ids must be 0..N-1 in order");
    mc.ply_path = (base / mc.ply).string();
    if (!fs::is_regular_file(mc.ply_path)) throw ConfigError(field + ".ply", "file not found: " + mc.ply_path);
    m.classes.push_back(std::move(mc));
  }
  if (!j.contains("poses") || !j["poses"].is_array()) throw ConfigError("manifest.poses", "expected an array");
  for (std::size_t i = 0; i < j["poses"].size(); ++i) {
    const auto& p = j["poses"][i];
    const std::string field = "manifest.poses[" + std::to_string(i) + "]";
    ManifestPose mp;
    try {
      mp.pose_id = p.at("pose_id").get<std::uint64_t>();
      mp.class_id = p.at("class_id").get<std::uint32_t>();
      const std::string split = p.at("split").get<std::string>();
      if (split != "train" && split != "test") throw ConfigError(field + ".split", "must be train or test");
      mp.split = split == "train" ? Split::Train : Split::Test;
      mp.angles = {p.at("yaw_deg").get<double>(), p.at("pitch_deg").get<double>(), p.at("roll_deg").get<double>(),
                   p.at("radius_m").get<double>()};
    } catch (const json::exception& e) {
      throw ConfigError(field, std::string("bad or missing field: ") + e.what());
    }
    if (mp.class_id >= m.classes.size()) throw ConfigError(field + ".class_id", "unknown class");
    if (!p.contains("rotvec")) throw ConfigError(field + ".rotvec", "missing");
    if (!p.contains("translation_m")) throw ConfigError(field + ".translation_m", "missing");
    mp.pose.rotvec = vec_from(p["rotvec"], field + ".rotvec");
    mp.pose.translation = vec_from(p["translation_m"], field + ".translation_m");
    m.poses.push_back(mp);
  }
  return m;
}

SceneFrame Dataset::frame(const ManifestPose& pose) const { return SceneFrame(clouds.at(pose.class_id), pose.pose); }

std::vector<const ManifestPose*> Dataset::poses(Split split) const {
  std::vector<const ManifestPose*> out;
  for (const auto& p : manifest.poses)
    if (p.split == split) out.push_back(&p);
  return out;
}

Dataset load_dataset(const RunConfig& config) {
  Dataset d;
  d.manifest = load_manifest(config.manifest_path());
  for (const auto& c : d.manifest.classes) {
    auto cloud = std::make_shared<ColoredPointCloud>(read_ply_file(c.ply_path));
    log::info("loaded class " + std::to_string(c.class_id) + " (" + std::to_string(cloud->size()) + " points)");
    d.clouds.push_back(std::move(cloud));
  }
  return d;
}

SeedSpec pose_seed(std::uint64_t master, std::uint64_t pose_id, StreamPurpose purpose) {
  return {master, pose_id * kStreamsPerPose + static_cast<std::uint64_t>(purpose)};
}

std::unique_ptr<Classifier> make_classifier(const RunConfig& config, std::size_t class_count) {
  if (config.classifier.kind == "external")
    return std::make_unique<ExternalClassifier>(config.classifier.command, class_count);
  auto model = std::make_shared<const CentroidModel>(load_centroid_model(config.model_path()));
  if (model->class_count() != class_count)
    throw ConfigError("classifier.model", "model has " + std::to_string(model->class_count()) +
                                              " classes, manifest has " + std::to_string(class_count));
  if (model->features.width != config.intrinsics.width || model->features.height != config.intrinsics.height)
    throw ConfigError("classifier.model", "model input size does not match the intrinsics");
  return std::make_unique<CentroidClassifier>(std::move(model));
}

// ---------------------------------------------------------------------------
// Per-pose evaluation

EvalRecord evaluate_pose(SmoothingEngine& engine, const SceneFrame& frame, std::uint32_t label,
                         std::uint64_t pose_id, const RunConfig& config, bool with_attacks) {
  const SmoothingSpec spec = config.smoothing();
  const MotionAxis axis = config.axis;
  const double sigma = spec.sigma_for(axis);

  EvalRecord r;
  r.pose_id = pose_id;
  r.true_label = label;
  r.axis = axis;
  r.attack_radius = config.radius;
  r.benign_pred = engine.predict(frame).label;

  const auto selection =
      engine.smoothed_predict(frame, spec, config.n0, config.alpha, pose_seed(config.seed, pose_id, StreamPurpose::Select));
  if (!selection.abstained) r.smoothed_pred = selection.top_class;

  r.certificate.axis = axis;
  r.certificate.sigma = sigma;
  r.certificate.confidence = 1.0 - config.alpha;
  r.certificate.top_class = selection.top_class;
  r.certificate.runner_up_class = selection.runner_up_class;
  // A zero-sigma axis carries no certificate; it is reported as abstained.
  if (!selection.abstained && sigma > 0.0) {
    const auto counts =
        engine.sample_counts(frame, spec, config.n, pose_seed(config.seed, pose_id, StreamPurpose::Estimate));
    r.certificate =
        certify_one_axis(counts, selection.top_class, selection.runner_up_class, axis, sigma, config.alpha);
  }

  if (with_attacks) {
    // Predictions are memoized per motion value so nested grids share work.
    std::map<double, std::uint32_t> base_memo;
    std::map<double, std::optional<std::uint32_t>> smooth_memo;
    const SeedSpec attack_seed = pose_seed(config.seed, pose_id, StreamPurpose::Attack);
    for (std::size_t k : config.attack_k) {
      const auto attacks = attack_motions(axis, config.radius, k);
      bool base_ok = true;
      bool smooth_ok = true;
      for (const auto& m : attacks) {
        const double v = axis_value(m, axis);
        auto b = base_memo.find(v);
        if (b == base_memo.end()) b = base_memo.emplace(v, engine.predict(frame, m).label).first;
        base_ok = base_ok && b->second == label;
        auto s = smooth_memo.find(v);
        if (s == smooth_memo.end()) {
          const auto p = engine.smoothed_predict(frame.moved(m), spec, config.n0, config.alpha, attack_seed);
          s = smooth_memo.emplace(v, p.abstained ? std::nullopt : std::optional<std::uint32_t>(p.top_class)).first;
        }
        smooth_ok = smooth_ok && s->second && *s->second == label;
      }
      r.base_empirical.push_back({k, base_ok});
      r.smoothed_empirical.push_back({k, smooth_ok});
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Stages

void run_gen_scene(const RunConfig& config) {
  config.validate();
  const fs::path out = prepare_out(config);
  const fs::path manifest_path = config.manifest_path();
  fs::create_directories(manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path());
  const fs::path scene_dir = manifest_path.parent_path() / "scene";
  fs::create_directories(scene_dir);

  Manifest m;
  const auto& sc = config.scene;
  for (std::uint32_t c = 0; c < sc.classes; ++c) {
    SceneSpec spec = default_scene_spec(c, splitmix64(config.seed ^ splitmix64(0x5343454e45ull + c)));
    spec.point_density = sc.point_density_m;
    spec.object_point_density = sc.object_point_density_m;
    spec.object_radius = sc.object_radius_m;
    spec.max_points = sc.max_points;
    ColoredPointCloud cloud = generate_scene(spec);
    if (sc.uniform_k > 1 || sc.voxel_m > 0.0) {
      if (sc.voxel_m > 0.0)
        cloud = two_stage_downsample(cloud, sc.uniform_k, sc.voxel_m);
      else
        cloud = uniform_downsample(cloud, sc.uniform_k);
    }
    ManifestClass mc;
    mc.class_id = c;
    mc.shape = spec.shape;
    mc.color = spec.object_color;
    mc.ply = "scene/class_" + std::to_string(c) + ".ply";
    mc.ply_path = (manifest_path.parent_path() / mc.ply).string();
    mc.points = cloud.size();
    write_ply_file(cloud, mc.ply_path);
    log::info("class " + std::to_string(c) + ": " + std::string(to_string(spec.shape)) + ", " +
              std::to_string(cloud.size()) + " points");
    m.classes.push_back(mc);
  }
  std::uint64_t id = 0;
  const auto tests = sample_poses(Split::Test, sc.test_poses_per_class, sc.gap_deg, config.seed, sc.poses,
                                  sc.test_poses_per_class);
  for (std::uint32_t c = 0; c < sc.classes; ++c)
    for (const auto& p : tests) m.poses.push_back({id++, c, Split::Test, p.angles, p.pose});
  for (std::uint32_t c = 0; c < sc.classes; ++c) {
    const auto train = sample_poses(Split::Train, sc.train_poses_per_class, sc.gap_deg,
                                    splitmix64(config.seed ^ splitmix64(0x545241494eull + c)), sc.poses,
                                    sc.test_poses_per_class);
    for (const auto& p : train) m.poses.push_back({id++, c, Split::Train, p.angles, p.pose});
  }
  save_manifest(m, manifest_path.string());
  write_sidecar(config, manifest_path);
}

void run_render(const RunConfig& config) {
  config.validate();
  const Dataset d = load_dataset(config);
  const fs::path dir = prepare_out(config) / "render";
  fs::create_directories(dir);
  const MotionParams motion = config.radius > 0.0 ? axis_motion(config.axis, config.radius) : MotionParams{};
  RenderScratch scratch;
  ProjectedImage image;
  for (const ManifestPose* p : d.poses(config.render_split == "train" ? Split::Train : Split::Test)) {
    render_into(d.frame(*p), motion, config.intrinsics, scratch, image);
    const std::string stem = "pose_" + std::to_string(p->pose_id);
    write_image_tensor(image, (dir / (stem + ".cmsimg")).string());
    write_png(image, (dir / (stem + ".png")).string());
  }
  write_sidecar(config, dir / "render");
}

CentroidModel run_train(const RunConfig& config) {
  config.validate();
  const Dataset d = load_dataset(config);
  prepare_out(config);
  FeatureSpec fs_spec;
  fs_spec.block = config.classifier.block;
  fs_spec.width = config.intrinsics.width;
  fs_spec.height = config.intrinsics.height;
  fs_spec.channels = 3;
  const SmoothingSpec spec = config.smoothing();
  std::vector<std::vector<double>> features;
  std::vector<std::uint32_t> labels;
  RenderScratch scratch;
  ProjectedImage image;
  for (const ManifestPose* p : d.poses(Split::Train)) {
    const SceneFrame frame = d.frame(*p);
    for (std::size_t j = 0; j <= config.classifier.augment_samples; ++j) {
      const MotionParams motion =
          j == 0 ? MotionParams{} : sample_gaussian(spec, pose_seed(config.seed, p->pose_id, StreamPurpose::Augment), j - 1);
      render_into(frame, motion, config.intrinsics, scratch, image);
      features.push_back(featurize(image, fs_spec));
      labels.push_back(p->class_id);
    }
  }
  const CentroidModel model =
      train_centroid_features(features, labels, d.manifest.classes.size(), fs_spec, config.classifier.temperature);
  save_centroid_model(model, config.model_path());
  write_sidecar(config, config.model_path());
  log::info("trained on " + std::to_string(features.size()) + " renders");
  return model;
}

namespace {

std::vector<EvalRecord> evaluate_test_poses(const RunConfig& config, bool with_attacks) {
  const Dataset d = load_dataset(config);
  const auto classifier = make_classifier(config, d.manifest.classes.size());
  SmoothingEngine engine(*classifier, config.intrinsics, config.workers);
  std::vector<EvalRecord> records;
  const auto tests = d.poses(Split::Test);
  if (tests.empty()) throw ConfigError("manifest.poses", "no test poses");
  for (const ManifestPose* p : tests) {
    records.push_back(evaluate_pose(engine, d.frame(*p), p->class_id, p->pose_id, config, with_attacks));
    log::debug("pose " + std::to_string(p->pose_id) + " done");
  }
  return records;
}

}  // namespace

std::string certificates_to_json(const std::vector<EvalRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    const bool abstained = !r.smoothed_pred || r.certificate.abstained;
    json j = {{"pose_id", r.pose_id},
              {"true_label", r.true_label},
              {"benign_pred", r.benign_pred},
              {"smoothed_pred", r.smoothed_pred ? json(*r.smoothed_pred) : json(nullptr)},
              {"abstained", abstained},
              {"pA_lower", r.certificate.pA_lower},
              {"pB_upper", r.certificate.pB_upper},
              {"radius", abstained ? json(nullptr) : json(r.certificate.radius)},
              {"axis", std::string(to_string(r.axis))},
              {"sigma", r.certificate.sigma},
              {"confidence", r.certificate.confidence}};
    arr.push_back(std::move(j));
  }
  return arr.dump(1);
}

std::vector<EvalRecord> run_certify(const RunConfig& config) {
  config.validate();
  const fs::path out = prepare_out(config);
  auto records = evaluate_test_poses(config, false);
  write_text(out / "certificates.json", certificates_to_json(records));
  write_sidecar(config, out / "certificates.json");
  return records;
}

std::vector<EvalRecord> run_evaluate(const RunConfig& config) {
  config.validate();
  const fs::path out = prepare_out(config);
  auto records = evaluate_test_poses(config, true);
  write_records_csv(records, (out / "records.csv").string());
  const auto rows = summarize(records, config.attack_k);
  write_summary_csv(rows, config.attack_k, (out / "summary.csv").string());
  const auto radii = config.resolved_sweep_radii();
  const auto sweep = radius_sweep(records, radii);
  write_sweep_csv(sweep, (out / "sweep.csv").string());
  write_text(out / "certificates.json", certificates_to_json(records));
  write_sidecar(config, out / "evaluate");
  return records;
}

std::string run_report(const RunConfig& config) {
  const fs::path out(config.out);
  for (const char* name : {"summary.csv", "sweep.csv"}) {
    const fs::path path = out / name;
    if (!fs::is_regular_file(path)) throw Error("missing '" + path.string() + "'; run evaluate first");
  }
  std::ostringstream report;
  for (const char* name : {"summary.csv", "sweep.csv"}) {
    std::istringstream in(read_text((out / name).string()));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      rows.push_back(std::move(cells));
    }
    std::vector<std::size_t> width;
    for (const auto& row : rows)
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (width.size() <= i) width.push_back(0);
        width[i] = std::max(width[i], row[i].size());
      }
    report << name << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        report << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << row[i];
      report << '\n';
    }
    report << '\n';
  }
  write_text(out / "report.txt", report.str());
  return report.str();
}

}  // namespace cms
