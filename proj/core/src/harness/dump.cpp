#include "hcfd/harness/dump.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hcfd::harness {

namespace {

static_assert(std::endian::native == std::endian::little, "dump I/O assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Cursor {
 public:
  explicit Cursor(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void doubles(std::vector<double>& out, std::size_t n) {
    need(n * sizeof(double));
    out.resize(n);
    std::memcpy(out.data(), b_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw Error("field dump truncated");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

DumpBlock record(int id, const Index3& cells) {
  DumpBlock d;
  d.id = id;
  d.cells = cells;
  const auto n = static_cast<std::size_t>(cells[0]) * cells[1] * cells[2];
  for (auto& a : d.data) a.assign(n, 0.0);
  return d;
}

void copyInto(DumpBlock& d, const BlockField& f, const Index3& at) {
  const auto e = f.extent();
  for (int c = 0; c < kNumVars; ++c)
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i)
          d.data[static_cast<std::size_t>(c)][static_cast<std::size_t>(
              (at[0] + i) + d.cells[0] * ((at[1] + j) + static_cast<std::size_t>(d.cells[1]) * (at[2] + k)))] =
              f.at(c, i, j, k);
}

}  // namespace

FieldDump makeDump(const std::vector<BlockField>& blocks, const partition::PartitionPlan& plan, bool perBlock) {
  if (blocks.size() != plan.blocks.size()) throw Error("field dump needs every block of the plan");
  FieldDump out;
  if (perBlock) {
    for (const auto& b : blocks) {
      out.blocks.push_back(record(b.id(), b.extent()));
      copyInto(out.blocks.back(), b, {0, 0, 0});
    }
    return out;
  }
  out.blocks.push_back(record(0, plan.zone.cells));
  for (const auto& b : blocks) copyInto(out.blocks.back(), b, plan.blocks[static_cast<std::size_t>(b.id())].box.lo);
  return out;
}

std::vector<std::uint8_t> encodeDump(const FieldDump& d) {
  std::vector<std::uint8_t> out;
  put<std::uint32_t>(out, kDumpMagic);
  put<std::uint32_t>(out, kDumpVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.blocks.size()));
  for (const auto& b : d.blocks) {
    put<std::int32_t>(out, b.id);
    for (int a = 0; a < 3; ++a) put<std::int32_t>(out, b.cells[a]);
    for (const auto& comp : b.data) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(comp.data());
      out.insert(out.end(), p, p + comp.size() * sizeof(double));
    }
  }
  return out;
}

FieldDump decodeDump(const std::vector<std::uint8_t>& bytes) {
  Cursor c(bytes);
  if (c.get<std::uint32_t>() != kDumpMagic) throw Error("not a field dump (bad magic)");
  const auto version = c.get<std::uint32_t>();
  if (version != kDumpVersion) throw Error("unsupported field dump version " + std::to_string(version));
  const auto count = c.get<std::uint32_t>();
  FieldDump d;
  for (std::uint32_t b = 0; b < count; ++b) {
    DumpBlock blk;
    blk.id = c.get<std::int32_t>();
    for (int a = 0; a < 3; ++a) {
      blk.cells[a] = c.get<std::int32_t>();
      if (blk.cells[a] < 0) throw Error("field dump: negative extent");
    }
    const auto n = static_cast<std::size_t>(blk.cells[0]) * blk.cells[1] * blk.cells[2];
    for (auto& comp : blk.data) c.doubles(comp, n);
    d.blocks.push_back(std::move(blk));
  }
  if (!c.done()) throw Error("field dump has trailing bytes");
  return d;
}

void writeDump(const FieldDump& d, const std::string& path) {
  const auto bytes = encodeDump(d);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

FieldDump readDump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decodeDump(bytes);
}

}  // namespace hcfd::harness
