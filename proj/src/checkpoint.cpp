#include "amir/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace amir {

namespace {

constexpr char kMagic[4] = {'A', 'M', 'C', 'K'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw CheckpointError("checkpoint truncated");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string get_string(std::istream& in) {
  auto n = get<std::uint32_t>(in);
  if (n > (1u << 20)) throw CheckpointError("checkpoint corrupt: string size");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw CheckpointError("checkpoint truncated");
  return s;
}

template <class T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
std::vector<T> get_vec(std::istream& in) {
  auto n = get<std::uint64_t>(in);
  if (n > (1ull << 32)) throw CheckpointError("checkpoint corrupt: vector size");
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw CheckpointError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint: " + tmp.string());
    out.write(kMagic, 4);
    put<std::uint32_t>(out, Checkpoint::kFormatVersion);
    put<std::uint64_t>(out, ckpt.config_hash);
    put<std::int32_t>(out, ckpt.stage);
    put<std::int32_t>(out, ckpt.epoch);
    put<std::int32_t>(out, ckpt.built_levels);
    put_string(out, ckpt.variant);

    put<std::uint64_t>(out, ckpt.assignments.size());
    for (const auto& a : ckpt.assignments) put_vec(out, a.path);

    put<std::uint64_t>(out, ckpt.params.size());
    for (const auto& [name, t] : ckpt.params) {
      put_string(out, name);
      put_vec(out, t.shape);
      put_vec(out, t.data);
    }

    put<std::int64_t>(out, ckpt.opt_steps);
    put<std::uint64_t>(out, ckpt.opt_mv.size());
    for (const auto& [name, mv] : ckpt.opt_mv) {
      put_string(out, name);
      put_vec(out, mv.first);
      put_vec(out, mv.second);
    }
    if (!out) throw CheckpointError("write failure: " + tmp.string());
  }
  fs::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  auto version = get<std::uint32_t>(in);
  if (version != Checkpoint::kFormatVersion)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  Checkpoint c;
  c.config_hash = get<std::uint64_t>(in);
  c.stage = get<std::int32_t>(in);
  c.epoch = get<std::int32_t>(in);
  c.built_levels = get<std::int32_t>(in);
  c.variant = get_string(in);

  auto na = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < na; ++i) {
    TreeAssignment a;
    a.path = get_vec<int>(in);
    c.assignments.push_back(std::move(a));
  }

  auto np = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < np; ++i) {
    std::string name = get_string(in);
    Checkpoint::Tensor t;
    t.shape = get_vec<int>(in);
    t.data = get_vec<float>(in);
    std::size_t numel = 1;
    for (int d : t.shape) numel *= static_cast<std::size_t>(d);
    if (numel != t.data.size())
      throw CheckpointError("checkpoint corrupt: tensor " + name);
    c.params.emplace(std::move(name), std::move(t));
  }

  c.opt_steps = get<std::int64_t>(in);
  auto no = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < no; ++i) {
    std::string name = get_string(in);
    auto m = get_vec<float>(in);
    auto v = get_vec<float>(in);
    c.opt_mv.emplace(std::move(name), std::make_pair(std::move(m), std::move(v)));
  }
  return c;
}

void capture_params(const nn::ParamStore<float>& store, const std::string& prefix,
                    Checkpoint& ckpt) {
  for (const auto& [name, p] : store.all()) {
    if (name.rfind(prefix, 0) != 0) continue;
    ckpt.params[name] = {p.shape(),
                         {p.value().v.begin(), p.value().v.end()}};
  }
}

void apply_params(const Checkpoint& ckpt, const std::string& prefix,
                  nn::ParamStore<float>& store) {
  size_t applied = 0;
  for (auto& [name, p] : store.all()) {
    if (name.rfind(prefix, 0) != 0) continue;
    auto it = ckpt.params.find(name);
    if (it == ckpt.params.end())
      throw CheckpointError("checkpoint missing parameter: " + name);
    if (it->second.shape != p.shape())
      throw CheckpointError("checkpoint shape mismatch: " + name);
    p.value().v.assign(it->second.data.begin(), it->second.data.end());
    ++applied;
  }
  size_t expected = 0;
  for (const auto& [name, t] : ckpt.params)
    if (name.rfind(prefix, 0) == 0) ++expected;
  if (applied != expected)
    throw CheckpointError("checkpoint has parameters unknown to the model");
}

void capture_optimizer(nn::AdamW<float>& opt, const nn::ParamStore<float>& store,
                       Checkpoint& ckpt) {
  ckpt.opt_steps = opt.steps();
  auto& slots = opt.slots();
  size_t k = 0;
  for (const auto& [name, p] : store.all()) {
    if (k >= slots.size()) throw CheckpointError("optimizer/store size mismatch");
    ckpt.opt_mv[name] = {slots[k].m, slots[k].v};
    ++k;
  }
}

void apply_optimizer(const Checkpoint& ckpt, const nn::ParamStore<float>& store,
                     nn::AdamW<float>& opt) {
  opt.set_steps(ckpt.opt_steps);
  auto& slots = opt.slots();
  size_t k = 0;
  for (const auto& [name, p] : store.all()) {
    auto it = ckpt.opt_mv.find(name);
    if (it == ckpt.opt_mv.end())
      throw CheckpointError("checkpoint missing optimizer state: " + name);
    if (it->second.first.size() != p.numel())
      throw CheckpointError("optimizer state size mismatch: " + name);
    slots[k].m = it->second.first;
    slots[k].v = it->second.second;
    ++k;
  }
}

}  // namespace amir
