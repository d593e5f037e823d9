#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vcpcfg/training.hpp"

namespace vcpcfg::training {

namespace {

constexpr char kMagic[7] = {'V', 'C', 'P', 'C', 'F', 'G', '1'};
constexpr std::uint32_t kVersion = 1;

// Reserved record-name prefixes; everything else is a model parameter.
const std::string kOptM = "__opt.m.";
const std::string kOptV = "__opt.v.";
const std::string kOptT = "__opt.t";
const std::string kMetaEpoch = "__meta.epoch";
const std::string kMetaValHistory = "__meta.val_history";
const std::string kMetaConfig = "__meta.config";

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  std::ifstream in;
  std::string path;
  std::size_t offset = 0;

  void read(void* dst, std::size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw DataError("checkpoint " + path + " truncated at byte offset " +
                      std::to_string(offset));
    offset += n;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    return static_cast<std::uint32_t>(b[0]) |
           static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 |
           static_cast<std::uint32_t>(b[3]) << 24;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

void write_record(std::ostream& out, const std::string& name,
                  const std::vector<std::uint32_t>& dims,
                  const std::vector<double>& values) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  std::size_t expect = 1;
  for (std::uint32_t d : dims) {
    put_u32(out, d);
    expect *= d;
  }
  require(values.size() == expect, "record " + name + " has inconsistent dims");
  for (double v : values) put_f32(out, static_cast<float>(v));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kVersion);

  std::uint32_t records = static_cast<std::uint32_t>(
      ckpt.params.arrays().size() + ckpt.opt.m.size() + ckpt.opt.v.size() + 4);
  put_u32(out, records);

  for (const auto& [name, arr] : ckpt.params.arrays())
    write_record(out, name,
                 {static_cast<std::uint32_t>(arr.rows),
                  static_cast<std::uint32_t>(arr.cols)},
                 arr.data);
  for (const auto& [name, v] : ckpt.opt.m)
    write_record(out, kOptM + name, {static_cast<std::uint32_t>(v.size())}, v);
  for (const auto& [name, v] : ckpt.opt.v)
    write_record(out, kOptV + name, {static_cast<std::uint32_t>(v.size())}, v);
  write_record(out, kOptT, {1}, {static_cast<double>(ckpt.opt.t)});
  write_record(out, kMetaEpoch, {1}, {static_cast<double>(ckpt.epoch)});
  write_record(out, kMetaValHistory,
               {static_cast<std::uint32_t>(ckpt.val_history.size())},
               ckpt.val_history);
  // Config text as one byte value per float; bytes are exact in f32.
  std::vector<double> cfg_bytes(ckpt.config_snapshot.size());
  for (std::size_t i = 0; i < cfg_bytes.size(); ++i)
    cfg_bytes[i] = static_cast<double>(
        static_cast<unsigned char>(ckpt.config_snapshot[i]));
  write_record(out, kMetaConfig,
               {static_cast<std::uint32_t>(cfg_bytes.size())}, cfg_bytes);

  out.flush();
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r;
  r.path = path;
  r.in.open(path, std::ios::binary);
  if (!r.in) throw DataError("cannot open checkpoint: " + path);

  char magic[sizeof kMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version) + " in " + path);
  const std::uint32_t records = r.u32();

  Checkpoint ckpt;
  bool saw_t = false, saw_epoch = false, saw_history = false, saw_cfg = false;
  for (std::uint32_t rec = 0; rec < records; ++rec) {
    const std::uint32_t name_len = r.u32();
    std::string name(name_len, '\0');
    if (name_len > 0) r.read(name.data(), name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 8)
      throw DataError("checkpoint " + path + ": record " + name +
                      " has implausible rank " + std::to_string(rank));
    std::vector<std::uint32_t> dims(rank);
    std::size_t count = 1;
    for (auto& d : dims) {
      d = r.u32();
      count *= d;
    }
    std::vector<double> values(count);
    for (auto& v : values) v = static_cast<double>(r.f32());

    if (name.rfind(kOptM, 0) == 0) {
      ckpt.opt.m[name.substr(kOptM.size())] = std::move(values);
    } else if (name.rfind(kOptV, 0) == 0) {
      ckpt.opt.v[name.substr(kOptV.size())] = std::move(values);
    } else if (name == kOptT) {
      require(count == 1, "checkpoint __opt.t must hold one value");
      ckpt.opt.t = static_cast<long>(values[0]);
      saw_t = true;
    } else if (name == kMetaEpoch) {
      require(count == 1, "checkpoint __meta.epoch must hold one value");
      ckpt.epoch = static_cast<int>(values[0]);
      saw_epoch = true;
    } else if (name == kMetaValHistory) {
      ckpt.val_history = std::move(values);
      saw_history = true;
    } else if (name == kMetaConfig) {
      ckpt.config_snapshot.resize(count);
      for (std::size_t i = 0; i < count; ++i)
        ckpt.config_snapshot[i] =
            static_cast<char>(static_cast<unsigned char>(values[i]));
      saw_cfg = true;
    } else if (name.rfind("__", 0) == 0) {
      throw DataError("checkpoint " + path + ": unknown reserved record " +
                      name);
    } else {
      if (rank != 2)
        throw DataError("checkpoint " + path + ": parameter " + name +
                        " must have rank 2, got " + std::to_string(rank));
      Array& a = ckpt.params.add(name, static_cast<int>(dims[0]),
                                 static_cast<int>(dims[1]));
      a.data = std::move(values);
    }
  }
  if (!(saw_t && saw_epoch && saw_history && saw_cfg))
    throw DataError("checkpoint " + path + " is missing metadata records");

  // Trailing garbage means the writer and header disagree.
  char extra;
  r.in.read(&extra, 1);
  if (r.in.gcount() != 0)
    throw DataError("checkpoint " + path + " has trailing bytes after " +
                    std::to_string(records) + " records");
  return ckpt;
}

}  // namespace vcpcfg::training
