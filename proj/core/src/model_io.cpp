#include "biped/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "biped/errors.hpp"

namespace biped {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ModelError(origin + ": " + what);
}

Vec3 vec3(const json& j, const std::string& origin, const std::string& key) {
  if (!j.is_array() || j.size() != 3) fail(origin, key + " must be a 3-array");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) fail(origin, key + " entries must be numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

/// Inertia entries [ixx, iyy, izz, ixy, ixz, iyz] about the body CoM.
Mat3 inertia6(const json& j, const std::string& origin, const std::string& key) {
  if (!j.is_array() || j.size() != 6) fail(origin, key + " must be [ixx,iyy,izz,ixy,ixz,iyz]");
  double e[6];
  for (int i = 0; i < 6; ++i) {
    if (!j[i].is_number()) fail(origin, key + " entries must be numbers");
    e[i] = j[i].get<double>();
  }
  Mat3 I;
  I << e[0], e[3], e[4], e[3], e[1], e[5], e[4], e[5], e[2];
  return I;
}

Iso3 origin(const json& j, const std::string& where) {
  Iso3 T = Iso3::Identity();
  if (j.contains("xyz")) T.translation() = vec3(j["xyz"], where, "xyz");
  if (j.contains("rpy")) T.linear() = rotationFromRpy(vec3(j["rpy"], where, "rpy"));
  return T;
}

}  // namespace

RobotModel parseModel(const std::string& json_text, const std::string& where) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(where, std::string("parse error: ") + e.what());
  }

  RobotModel model;
  model.name = doc.value("name", "unnamed");
  if (doc.contains("gravity")) model.gravity = vec3(doc["gravity"], where, "gravity");

  if (!doc.contains("bodies") || !doc["bodies"].is_array() || doc["bodies"].empty())
    fail(where, "bodies array required");

  std::vector<double> tq, vl;
  for (const auto& jb : doc["bodies"]) {
    Body b;
    b.name = jb.value("name", "");
    const std::string ctx = where + " body '" + b.name + "'";
    std::string joint = jb.value("joint", "revolute");
    if (joint == "floating") {
      b.joint = JointType::Floating;
      b.parent = -1;
      if (!model.bodies.empty()) fail(ctx, "floating joint only on the first body");
    } else if (joint == "revolute") {
      b.joint = JointType::Revolute;
      if (model.bodies.empty()) fail(ctx, "first body must be floating");
      if (!jb.contains("parent")) fail(ctx, "parent required");
      const json& jp = jb["parent"];
      if (jp.is_string()) {
        b.parent = -1;
        for (size_t k = 0; k < model.bodies.size(); ++k) {
          if (model.bodies[k].name == jp.get<std::string>()) b.parent = static_cast<int>(k);
        }
        if (b.parent < 0) fail(ctx, "unknown parent '" + jp.get<std::string>() + "'");
      } else if (jp.is_number_integer()) {
        b.parent = jp.get<int>();
      } else {
        fail(ctx, "parent must be a name or index");
      }
      if (!jb.contains("axis")) fail(ctx, "axis required");
      b.axis = vec3(jb["axis"], ctx, "axis");
      double n = b.axis.norm();
      if (n < 1e-12) fail(ctx, "axis must be nonzero");
      b.axis /= n;
      tq.push_back(jb.value("torque_limit", 0.0));
      vl.push_back(jb.value("velocity_limit", 0.0));
    } else {
      fail(ctx, "joint must be 'floating' or 'revolute'");
    }
    if (jb.contains("origin")) b.T_parent_joint = origin(jb["origin"], ctx);
    if (!jb.contains("mass")) fail(ctx, "mass required");
    b.mass = jb["mass"].get<double>();
    if (jb.contains("com")) b.com = vec3(jb["com"], ctx, "com");
    if (!jb.contains("inertia")) fail(ctx, "inertia required");
    b.inertia = inertia6(jb["inertia"], ctx, "inertia");
    model.bodies.push_back(b);
  }
  model.n_j = static_cast<int>(model.bodies.size()) - 1;
  model.torque_limit = Eigen::Map<VecX>(tq.data(), static_cast<long>(tq.size()));
  model.velocity_limit = Eigen::Map<VecX>(vl.data(), static_cast<long>(vl.size()));

  if (doc.contains("frames")) {
    for (const auto& jf : doc["frames"]) {
      Frame f;
      f.name = jf.value("name", "");
      const std::string ctx = where + " frame '" + f.name + "'";
      if (!jf.contains("body")) fail(ctx, "body required");
      const std::string bname = jf["body"].get<std::string>();
      f.body = -1;
      for (size_t k = 0; k < model.bodies.size(); ++k) {
        if (model.bodies[k].name == bname) f.body = static_cast<int>(k);
      }
      if (f.body < 0) fail(ctx, "unknown body '" + bname + "'");
      f.T_body_frame = origin(jf, ctx);
      model.frames.push_back(f);
    }
  }

  if (doc.contains("feet")) {
    for (const auto& jf : doc["feet"]) {
      FootPatch p;
      if (!jf.contains("frame")) fail(where, "foot patch: frame required");
      const std::string fname = jf["frame"].get<std::string>();
      p.frame = -1;
      for (size_t k = 0; k < model.frames.size(); ++k) {
        if (model.frames[k].name == fname) p.frame = static_cast<int>(k);
      }
      if (p.frame < 0) fail(where, "foot patch: unknown frame '" + fname + "'");
      p.half_length = jf.value("half_length", 0.0);
      p.half_width = jf.value("half_width", 0.0);
      model.feet.push_back(p);
    }
  }

  model.nominal_posture = VecX::Zero(model.n_j);
  if (doc.contains("nominal")) {
    const json& jn = doc["nominal"];
    if (jn.contains("joints")) {
      const json& jj = jn["joints"];
      if (!jj.is_array() || static_cast<int>(jj.size()) != model.n_j)
        fail(where, "nominal.joints must list one angle per joint");
      for (int i = 0; i < model.n_j; ++i) model.nominal_posture(i) = jj[i].get<double>();
    }
    model.nominal_base_height = jn.value("base_height", 0.0);
  }

  model.validate();
  return model;
}

RobotModel loadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseModel(ss.str(), path);
}

}  // namespace biped
