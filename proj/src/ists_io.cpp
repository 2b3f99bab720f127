#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "slan/error.hpp"
#include "slan/ists.hpp"

namespace slan::data {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const std::string& path) {
  if (!fs::exists(path)) fail(ErrorKind::not_found, "no such file: " + path);
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  return out;
}

Instance instance_from_json(const json& j) {
  Instance inst;
  inst.id = j.at("id").get<std::string>();
  inst.label = j.at("label").get<int>();
  const json& st = j.at("statics");
  if (!st.is_null()) inst.statics = st.get<std::vector<double>>();
  for (const json& e : j.at("events")) {
    if (!e.is_array() || e.size() != 3) {
      throw json::other_error::create(501, "event must be [t, sensor, value]", &e);
    }
    inst.events.push_back(
        Observation{e[0].get<double>(), e[1].get<std::uint32_t>(), e[2].get<double>()});
  }
  return inst;
}

json instance_to_json(const Instance& inst) {
  json events = json::array();
  for (const Observation& e : inst.events) events.push_back({e.time, e.sensor, e.value});
  return json{{"id", inst.id},
              {"label", inst.label},
              {"statics", inst.statics ? json(*inst.statics) : json(nullptr)},
              {"events", std::move(events)}};
}

}  // namespace

Dataset read_jsonl(const std::string& path, const DatasetInfo& info) {
  std::ifstream in = open_in(path);
  Dataset ds;
  ds.info = info;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Instance inst;
    try {
      inst = instance_from_json(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      validate(inst, info);
    } catch (const Error& e) {
      fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

void write_jsonl(const Dataset& dataset, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Instance& inst : dataset.instances) out << instance_to_json(inst).dump() << '\n';
  if (!out) fail(ErrorKind::io, "write failed: " + path);
}

DatasetInfo read_meta_json(const std::string& path) {
  std::ifstream in = open_in(path);
  DatasetInfo info;
  try {
    const json j = json::parse(in);
    info.sensor_count = j.at("sensor_count").get<std::size_t>();
    info.static_count = j.at("static_count").get<std::size_t>();
    if (j.contains("sensor_names")) {
      info.sensor_names = j.at("sensor_names").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, path + ": " + e.what());
  }
  if (info.sensor_count == 0) fail(ErrorKind::parse, path + ": sensor_count must be positive");
  if (!info.sensor_names.empty() && info.sensor_names.size() != info.sensor_count) {
    fail(ErrorKind::parse, path + ": sensor_names length differs from sensor_count");
  }
  return info;
}

void write_meta_json(const DatasetInfo& info, const std::string& path) {
  std::ofstream out = open_out(path);
  out << json{{"sensor_count", info.sensor_count},
              {"static_count", info.static_count},
              {"sensor_names", info.sensor_names}}
             .dump(2)
      << '\n';
}

Splits read_split_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::not_found, "no such dataset directory: " + dir);
  const fs::path root(dir);
  const DatasetInfo info = read_meta_json((root / "meta.json").string());
  Splits s;
  s.train = read_jsonl((root / "train.jsonl").string(), info);
  s.val = read_jsonl((root / "val.jsonl").string(), info);
  s.test = read_jsonl((root / "test.jsonl").string(), info);
  return s;
}

void write_split_dir(const Splits& splits, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);
  write_meta_json(splits.train.info, (root / "meta.json").string());
  write_jsonl(splits.train, (root / "train.jsonl").string());
  write_jsonl(splits.val, (root / "val.jsonl").string());
  write_jsonl(splits.test, (root / "test.jsonl").string());
}

}  // namespace slan::data
