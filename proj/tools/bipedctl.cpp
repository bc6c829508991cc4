// bipedctl: scenario runner and model inspection CLI.
//
// Exit codes: 0 success / scenario completed; 1 robot fell; 2 simulation
// diverged; 3 configuration or input error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "biped/config_io.hpp"
#include "biped/dynamics.hpp"
#include "biped/errors.hpp"
#include "biped/log.hpp"
#include "biped/model_io.hpp"
#include "biped/runtime.hpp"

namespace {

using nlohmann::json;

int cmdRun(const std::string& config_path, const biped::ScenarioOverrides& overrides) {
  biped::ScenarioConfig cfg;
  try {
    cfg = biped::loadScenario(config_path, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  try {
    biped::Runtime runtime(cfg);
    const biped::RunResult result = runtime.run();
    json j;
    j["scenario"] = cfg.name;
    j["status"] = biped::toString(result.status);
    j["end_time_s"] = result.end_time;
    j["log"] = result.log_path;
    j["summary"] = result.summary_path;
    j["metrics"] = json::parse(biped::metricsToJson(result.metrics));
    std::cout << j.dump(2) << "\n";
    return static_cast<int>(result.status);
  } catch (const biped::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const biped::SimDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmdMetrics(const std::string& log_path) {
  try {
    const biped::LogTable table = biped::LogTable::Read(log_path);
    const biped::Metrics m = biped::computeMetrics(table);
    std::cout << biped::metricsToJson(m);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmdCheckModel(const std::string& model_path) {
  try {
    const biped::RobotModel model = biped::loadModel(model_path);

    // Evaluate the nominal standing pose.
    biped::Configuration conf = biped::Configuration::Zero(model);
    conf.q(2) = model.nominal_base_height;
    conf.q.tail(model.n_j) = model.nominal_posture;
    biped::Dynamics dyn(model);
    dyn.update(conf);

    json j;
    j["name"] = model.name;
    j["bodies"] = model.bodies.size();
    j["actuated_joints"] = model.n_j;
    j["total_mass_kg"] = model.totalMass();
    j["nominal_base_height_m"] = model.nominal_base_height;
    const biped::Vec3 com = dyn.centroidal().com;
    j["nominal_com_m"] = {com.x(), com.y(), com.z()};
    json frames = json::array();
    for (const biped::Frame& f : model.frames) frames.push_back(f.name);
    j["frames"] = frames;
    json feet = json::array();
    for (const biped::FootPatch& p : model.feet) {
      const biped::Vec3 sole =
          dyn.kinematics().framePose(p.frame).translation();
      feet.push_back({{"frame", model.frames[static_cast<size_t>(p.frame)].name},
                      {"half_length_m", p.half_length},
                      {"half_width_m", p.half_width},
                      {"nominal_sole_m", {sole.x(), sole.y(), sole.z()}}});
    }
    j["feet"] = feet;
    std::cout << j.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmdCii(const std::string& model_path, const std::string& sweep_path) {
  try {
    const biped::RobotModel model = biped::loadModel(model_path);
    const std::vector<biped::VecX> postures = biped::loadPostureSweep(sweep_path, model);

    biped::VecX q_ref = biped::VecX::Zero(model.nq());
    q_ref(6) = 1.0;
    q_ref(2) = model.nominal_base_height;
    q_ref.tail(model.n_j) = model.nominal_posture;

    const double score = biped::centroidalInertiaIsotropy(model, q_ref, postures);

    // CoM excursion over the same sweep (base pose held).
    biped::Dynamics dyn(model);
    biped::Configuration conf;
    conf.q = q_ref;
    conf.v = biped::VecX::Zero(model.nv());
    dyn.update(conf);
    const biped::Vec3 com_ref = dyn.centroidal().com;
    double mean_dev = 0.0, max_dev = 0.0;
    for (const biped::VecX& qj : postures) {
      conf.q = q_ref;
      conf.q.tail(model.n_j) = qj;
      dyn.update(conf);
      const double d = (dyn.centroidal().com - com_ref).norm();
      mean_dev += d;
      max_dev = std::max(max_dev, d);
    }
    mean_dev /= static_cast<double>(postures.size());

    json j;
    j["model"] = model.name;
    j["postures"] = postures.size();
    j["cii_score"] = score;
    j["com_excursion_mean_m"] = mean_dev;
    j["com_excursion_max_m"] = max_dev;
    std::cout << j.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biped locomotion scenario runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir, log_path, model_path, sweep_path;
  unsigned seed = 0;
  double duration = 0.0;
  bool has_seed = false, has_duration = false, has_out = false;

  CLI::App* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", config_path, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Output directory override")->each([&](const std::string&) {
    has_out = true;
  });
  run->add_option("--seed", seed, "Seed override")->each([&](const std::string&) {
    has_seed = true;
  });
  run->add_option("--duration", duration, "Duration override, seconds")
      ->each([&](const std::string&) { has_duration = true; });

  CLI::App* metrics = app.add_subcommand("metrics", "Summarize a run log");
  metrics->add_option("log", log_path, "Log file")->required();

  CLI::App* check = app.add_subcommand("check-model", "Validate and describe a model file");
  check->add_option("model", model_path, "Model JSON")->required();

  CLI::App* cii = app.add_subcommand("cii", "Centroidal-inertia posture-variation score");
  cii->add_option("model", model_path, "Model JSON")->required();
  cii->add_option("--sweep", sweep_path, "Posture sweep JSON")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    biped::ScenarioOverrides overrides;
    if (has_seed) overrides.seed = seed;
    if (has_duration) overrides.duration = duration;
    if (has_out) overrides.out_dir = out_dir;
    return cmdRun(config_path, overrides);
  }
  if (metrics->parsed()) return cmdMetrics(log_path);
  if (check->parsed()) return cmdCheckModel(model_path);
  if (cii->parsed()) return cmdCii(model_path, sweep_path);
  return 3;
}
