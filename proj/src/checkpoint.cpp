#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "slan/error.hpp"
#include "slan/model.hpp"

// Layout (host byte order, little-endian on every supported target):
//   "SLANCKPT" u32 version
//   u64 sensors, hidden, t2v_dim, static_count
//   u32 aggregation, concat, state_init   u64 seed
//   u64 tensor_count
//   per tensor: u32 name_len, name, u64 rows, u64 cols, rows*cols f64
namespace slan::model {

namespace {

constexpr char kMagic[8] = {'S', 'L', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) fail(ErrorKind::parse, path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const SlanParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  const ModelConfig& c = params.config;
  out.write(kMagic, sizeof kMagic);
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(c.sensors));
  put(out, static_cast<std::uint64_t>(c.hidden));
  put(out, static_cast<std::uint64_t>(c.t2v_dim));
  put(out, static_cast<std::uint64_t>(c.static_count));
  put(out, static_cast<std::uint32_t>(c.aggregation));
  put(out, static_cast<std::uint32_t>(c.concat));
  put(out, static_cast<std::uint32_t>(c.state_init));
  put(out, c.seed);

  std::uint64_t count = 0;
  params.for_each([&](const std::string&, const Tensor&) { ++count; }, true);
  put(out, count);
  params.for_each(
      [&](const std::string& name, const Tensor& t) {
        put(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put(out, static_cast<std::uint64_t>(t.rows));
        put(out, static_cast<std::uint64_t>(t.cols));
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
      },
      true);
  if (!out) fail(ErrorKind::io, "write failed: " + path);
}

SlanParams load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::not_found, "no such checkpoint: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    fail(ErrorKind::parse, path + ": not a SLAN checkpoint");
  }
  if (get<std::uint32_t>(in, path) != kVersion) {
    fail(ErrorKind::parse, path + ": unsupported checkpoint version");
  }
  ModelConfig c;
  c.sensors = get<std::uint64_t>(in, path);
  c.hidden = get<std::uint64_t>(in, path);
  c.t2v_dim = get<std::uint64_t>(in, path);
  c.static_count = get<std::uint64_t>(in, path);
  const auto agg = get<std::uint32_t>(in, path);
  const auto concat = get<std::uint32_t>(in, path);
  const auto init = get<std::uint32_t>(in, path);
  if (agg > 2 || concat > 2 || init > 1) fail(ErrorKind::parse, path + ": bad header enum");
  c.aggregation = static_cast<Aggregation>(agg);
  c.concat = static_cast<ConcatMode>(concat);
  c.state_init = static_cast<StateInit>(init);
  c.seed = get<std::uint64_t>(in, path);

  std::map<std::string, Tensor> tensors;
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > 4096) fail(ErrorKind::parse, path + ": corrupt tensor name");
    std::string name(len, '\0');
    in.read(name.data(), len);
    Tensor t;
    t.rows = get<std::uint64_t>(in, path);
    t.cols = get<std::uint64_t>(in, path);
    t.data.resize(t.rows * t.cols);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) fail(ErrorKind::parse, path + ": truncated tensor " + name);
    tensors.emplace(std::move(name), std::move(t));
  }

  SlanParams p = init_params(c);
  p.for_each(
      [&](const std::string& name, Tensor& t) {
        auto it = tensors.find(name);
        if (it == tensors.end()) fail(ErrorKind::parse, path + ": missing tensor " + name);
        if (!it->second.same_shape(t)) {
          fail(ErrorKind::parse, path + ": tensor " + name + " has shape " +
                                     it->second.shape_str() + ", expected " + t.shape_str());
        }
        t = std::move(it->second);
        tensors.erase(it);
      },
      true);
  if (!tensors.empty()) fail(ErrorKind::parse, path + ": unexpected tensor " + tensors.begin()->first);
  return p;
}

}  // namespace slan::model
