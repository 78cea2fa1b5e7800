#include "cms/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cms/errors.hpp"
#include "json.hpp"

namespace cms {

using nlohmann::json;

namespace {

// Reads fields of one JSON object, recording which keys were consumed so
// unknown keys can be reported with their full path.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  void get_axis(const std::string& key, MotionAxis& out) {
    std::string name;
    get(key, name);
    if (name.empty()) return;
    try {
      out = parse_axis(name);
    } catch (const InvalidArgument&) {
      throw ConfigError(field(key), "unknown axis '" + name + "'");
    }
  }

  const json* child(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

void RunConfig::validate() const {
  require(scene.classes >= 2, "scene.classes", "must be >= 2");
  require(scene.test_poses_per_class >= 1, "scene.test_poses_per_class", "must be >= 1");
  require(scene.train_poses_per_class >= 1, "scene.train_poses_per_class", "must be >= 1");
  require(scene.gap_deg >= 0.0 && scene.gap_deg < 180.0, "scene.gap_deg", "must be in [0, 180)");
  require(scene.point_density_m > 0.0, "scene.point_density_m", "must be positive");
  require(scene.object_point_density_m >= 0.0, "scene.object_point_density_m", "must be >= 0");
  require(scene.object_radius_m > 0.0 && scene.object_radius_m < 1.0, "scene.object_radius_m", "must be in (0, 1)");
  require(scene.max_points >= 1, "scene.max_points", "must be >= 1");
  require(scene.uniform_k >= 1, "scene.uniform_k", "must be >= 1");
  require(scene.voxel_m >= 0.0, "scene.voxel_m", "must be >= 0");
  require(scene.poses.test_radius > 0.0, "scene.poses.test_radius_m", "must be positive");
  require(scene.poses.train_radius_min > 0.0 && scene.poses.train_radius_min <= scene.poses.train_radius_max,
          "scene.poses.train_radius_min_m", "must be positive and <= train_radius_max_m");
  require(scene.poses.train_pitch_min_deg <= scene.poses.train_pitch_max_deg, "scene.poses.train_pitch_min_deg",
          "must be <= train_pitch_max_deg");
  require(scene.poses.train_roll_max_deg >= 0.0, "scene.poses.train_roll_max_deg", "must be >= 0");
  try {
    intrinsics.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("intrinsics", e.what());
  }
  for (auto [v, name] : {std::pair{sigma_x_m, "smoothing.sigma_x_m"}, {sigma_y_m, "smoothing.sigma_y_m"},
                         {sigma_z_m, "smoothing.sigma_z_m"}, {sigma_theta_rad, "smoothing.sigma_theta_rad"}})
    require(v >= 0.0 && std::isfinite(v), name, "must be finite and >= 0");
  if (fixed_axis) require(is_rotation(*fixed_axis), "smoothing.fixed_axis", "must be a rotation axis");
  if (sigma_theta_rad > 0.0)
    require(fixed_axis.has_value() || is_rotation(axis), "smoothing.fixed_axis",
            "required when sigma_theta_rad > 0 and the axis is a translation");
  require(radius >= 0.0 && std::isfinite(radius), "certify.radius", "must be finite and >= 0");
  require(n0 >= 1, "certify.n0", "must be >= 1");
  require(n >= 1, "certify.n", "must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, "certify.alpha", "must be in (0, 1)");
  require(!attack_k.empty(), "attack.k", "needs at least one grid size");
  for (auto k : attack_k) require(k >= 1, "attack.k", "grid sizes must be >= 1");
  for (std::size_t i = 1; i < sweep_radii.size(); ++i)
    require(sweep_radii[i - 1] <= sweep_radii[i], "evaluate.sweep_radii", "must be sorted ascending");
  require(classifier.kind == "centroid" || classifier.kind == "external", "classifier.kind",
          "must be \"centroid\" or \"external\"");
  if (classifier.kind == "external") require(!classifier.command.empty(), "classifier.command", "must be set");
  require(classifier.block >= 1, "classifier.block", "must be >= 1");
  require(classifier.temperature > 0.0, "classifier.temperature", "must be positive");
  require(render_split == "test" || render_split == "train", "render.split", "must be \"test\" or \"train\"");
  require(!out.empty(), "out", "must be set");
  require(workers >= 1 && workers <= 1024, "workers", "must be in [1, 1024]");
}

SmoothingSpec RunConfig::smoothing() const {
  SmoothingSpec s;
  s.sigma_x = sigma_x_m;
  s.sigma_y = sigma_y_m;
  s.sigma_z = sigma_z_m;
  s.sigma_theta = sigma_theta_rad;
  if (fixed_axis)
    s.fixed_axis = axis_unit(*fixed_axis);
  else if (is_rotation(axis))
    s.fixed_axis = axis_unit(axis);
  return s;
}

void RunConfig::set_axis_sigma(double sigma) {
  switch (axis) {
    case MotionAxis::Tx: sigma_x_m = sigma; break;
    case MotionAxis::Ty: sigma_y_m = sigma; break;
    case MotionAxis::Tz: sigma_z_m = sigma; break;
    default:
      sigma_theta_rad = sigma;
      fixed_axis = axis;
      break;
  }
}

std::string RunConfig::manifest_path() const {
  return manifest.empty() ? (std::filesystem::path(out) / "manifest.json").string() : manifest;
}

std::string RunConfig::model_path() const {
  return classifier.model.empty() ? (std::filesystem::path(out) / "model.json").string() : classifier.model;
}

std::vector<double> RunConfig::resolved_sweep_radii() const {
  if (!sweep_radii.empty()) return sweep_radii;
  std::vector<double> r;
  const double top = radius > 0.0 ? 2.0 * radius : 1.0;
  for (int i = 0; i <= 20; ++i) r.push_back(top * i / 20.0);
  return r;
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  RunConfig c;
  ObjectReader r(root, "");
  if (const json* s = r.child("scene")) {
    ObjectReader sr(*s, "scene");
    sr.get("classes", c.scene.classes);
    sr.get("train_poses_per_class", c.scene.train_poses_per_class);
    sr.get("test_poses_per_class", c.scene.test_poses_per_class);
    sr.get("gap_deg", c.scene.gap_deg);
    sr.get("point_density_m", c.scene.point_density_m);
    sr.get("object_point_density_m", c.scene.object_point_density_m);
    sr.get("object_radius_m", c.scene.object_radius_m);
    sr.get("max_points", c.scene.max_points);
    sr.get("uniform_k", c.scene.uniform_k);
    sr.get("voxel_m", c.scene.voxel_m);
    sr.get("manifest", c.manifest);
    if (const json* p = sr.child("poses")) {
      ObjectReader pr(*p, "scene.poses");
      auto& pc = c.scene.poses;
      pr.get("test_radius_m", pc.test_radius);
      pr.get("test_pitch_deg", pc.test_pitch_deg);
      pr.get("train_radius_min_m", pc.train_radius_min);
      pr.get("train_radius_max_m", pc.train_radius_max);
      pr.get("train_pitch_min_deg", pc.train_pitch_min_deg);
      pr.get("train_pitch_max_deg", pc.train_pitch_max_deg);
      pr.get("train_roll_max_deg", pc.train_roll_max_deg);
      pr.get("retry_budget", pc.retry_budget);
      pr.finish();
    }
    sr.finish();
  }
  if (const json* k = r.child("intrinsics")) {
    ObjectReader kr(*k, "intrinsics");
    kr.get("fx", c.intrinsics.fx);
    kr.get("fy", c.intrinsics.fy);
    kr.get("cx", c.intrinsics.cx);
    kr.get("cy", c.intrinsics.cy);
    kr.get("width", c.intrinsics.width);
    kr.get("height", c.intrinsics.height);
    kr.finish();
  }
  if (const json* s = r.child("smoothing")) {
    ObjectReader sr(*s, "smoothing");
    sr.get_axis("axis", c.axis);
    sr.get("sigma_x_m", c.sigma_x_m);
    sr.get("sigma_y_m", c.sigma_y_m);
    sr.get("sigma_z_m", c.sigma_z_m);
    sr.get("sigma_theta_rad", c.sigma_theta_rad);
    MotionAxis fixed = MotionAxis::Tx;
    std::string fixed_name;
    sr.get("fixed_axis", fixed_name);
    if (!fixed_name.empty()) {
      try {
        fixed = parse_axis(fixed_name);
      } catch (const InvalidArgument&) {
        throw ConfigError("smoothing.fixed_axis", "unknown axis '" + fixed_name + "'");
      }
      c.fixed_axis = fixed;
    }
    sr.finish();
  }
  if (const json* s = r.child("certify")) {
    ObjectReader cr(*s, "certify");
    cr.get("radius", c.radius);
    cr.get("n0", c.n0);
    cr.get("n", c.n);
    cr.get("alpha", c.alpha);
    cr.finish();
  }
  if (const json* s = r.child("attack")) {
    ObjectReader ar(*s, "attack");
    ar.get("k", c.attack_k);
    ar.finish();
  }
  if (const json* s = r.child("evaluate")) {
    ObjectReader er(*s, "evaluate");
    er.get("sweep_radii", c.sweep_radii);
    er.finish();
  }
  if (const json* s = r.child("classifier")) {
    ObjectReader cr(*s, "classifier");
    cr.get("kind", c.classifier.kind);
    cr.get("model", c.classifier.model);
    cr.get("block", c.classifier.block);
    cr.get("temperature", c.classifier.temperature);
    cr.get("augment_samples", c.classifier.augment_samples);
    cr.get("command", c.classifier.command);
    cr.finish();
  }
  if (const json* s = r.child("render")) {
    ObjectReader rr(*s, "render");
    rr.get("split", c.render_split);
    rr.finish();
  }
  r.get("seed", c.seed);
  r.get("out", c.out);
  r.get("workers", c.workers);
  r.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c, bool include_workers) {
  json j;
  const auto& p = c.scene.poses;
  j["scene"] = {{"classes", c.scene.classes},
                {"train_poses_per_class", c.scene.train_poses_per_class},
                {"test_poses_per_class", c.scene.test_poses_per_class},
                {"gap_deg", c.scene.gap_deg},
                {"point_density_m", c.scene.point_density_m},
                {"object_point_density_m", c.scene.object_point_density_m},
                {"object_radius_m", c.scene.object_radius_m},
                {"max_points", c.scene.max_points},
                {"uniform_k", c.scene.uniform_k},
                {"voxel_m", c.scene.voxel_m},
                {"manifest", c.manifest_path()},
                {"poses",
                 {{"test_radius_m", p.test_radius},
                  {"test_pitch_deg", p.test_pitch_deg},
                  {"train_radius_min_m", p.train_radius_min},
                  {"train_radius_max_m", p.train_radius_max},
                  {"train_pitch_min_deg", p.train_pitch_min_deg},
                  {"train_pitch_max_deg", p.train_pitch_max_deg},
                  {"train_roll_max_deg", p.train_roll_max_deg},
                  {"retry_budget", p.retry_budget}}}};
  j["intrinsics"] = {{"fx", c.intrinsics.fx},       {"fy", c.intrinsics.fy},
                     {"cx", c.intrinsics.cx},       {"cy", c.intrinsics.cy},
                     {"width", c.intrinsics.width}, {"height", c.intrinsics.height}};
  j["smoothing"] = {{"axis", std::string(to_string(c.axis))},
                    {"sigma_x_m", c.sigma_x_m},
                    {"sigma_y_m", c.sigma_y_m},
                    {"sigma_z_m", c.sigma_z_m},
                    {"sigma_theta_rad", c.sigma_theta_rad}};
  if (c.fixed_axis) j["smoothing"]["fixed_axis"] = std::string(to_string(*c.fixed_axis));
  j["certify"] = {{"radius", c.radius}, {"n0", c.n0}, {"n", c.n}, {"alpha", c.alpha}};
  j["attack"] = {{"k", c.attack_k}};
  j["evaluate"] = {{"sweep_radii", c.resolved_sweep_radii()}};
  j["classifier"] = {{"kind", c.classifier.kind},
                     {"block", c.classifier.block},
                     {"temperature", c.classifier.temperature},
                     {"augment_samples", c.classifier.augment_samples}};
  if (c.classifier.kind == "centroid")
    j["classifier"]["model"] = c.model_path();
  else
    j["classifier"]["command"] = c.classifier.command;
  j["render"] = {{"split", c.render_split}};
  j["seed"] = c.seed;
  j["out"] = c.out;
  if (include_workers) j["workers"] = c.workers;
  return j.dump(2);
}

}  // namespace cms
