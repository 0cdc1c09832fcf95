// .vprmap layout (little-endian):
//   "VPRM" | u32 version | u32 n | u64 entries | str config_json
//   per entry:
//     str place_id | str tag | u8 method | u32 rank | u32 m | m x str column_id
//     u8 flags (1 headings, 2 R, 4 singular values, 8 sources)
//     u32 retained count | retained u32s
//     [m f64 headings] [rank*m f64 R] [m f64 sigma] [m*n f32 sources]
//     rank*n f32 Q
// Strings are u32-length-prefixed UTF-8.

#include <cstring>

#include "placemap/binary_io.hpp"
#include "placemap/error.hpp"
#include "placemap/map_index.hpp"

namespace placemap {

namespace {

constexpr char kMagic[4] = {'V', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

enum Flags : std::uint8_t { kHeadings = 1, kR = 2, kSigma = 4, kSources = 8 };

void write_entry(io::ByteWriter& w, const MapSubspace& e) {
  w.str(e.place_id);
  w.str(e.tag);
  w.u8(static_cast<std::uint8_t>(e.method));
  w.u32(e.rank);
  w.u32(static_cast<std::uint32_t>(e.column_count()));
  for (const auto& id : e.column_ids) w.str(id);
  std::uint8_t flags = 0;
  if (e.column_headings) flags |= kHeadings;
  if (e.r_factor) flags |= kR;
  if (e.singular_values) flags |= kSigma;
  if (e.sources) flags |= kSources;
  w.u8(flags);
  w.u32(static_cast<std::uint32_t>(e.retained.size()));
  w.bytes(e.retained.data(), e.retained.size() * sizeof(std::uint32_t));
  if (e.column_headings) w.f64s(*e.column_headings);
  if (e.r_factor) w.f64s(*e.r_factor);
  if (e.singular_values) w.f64s(*e.singular_values);
  if (e.sources) w.f32s(*e.sources);
  w.f32s(e.q);
}

template <class T>
std::vector<T> read_block(io::ByteReader& r, std::size_t count) {
  r.need(count * sizeof(T));  // before allocating, so a corrupt count cannot exhaust memory
  std::vector<T> v(count);
  r.bytes(v.data(), count * sizeof(T));
  return v;
}

MapSubspace read_entry(io::ByteReader& r, std::size_t n) {
  MapSubspace e;
  e.place_id = r.str();
  e.tag = r.str();
  const std::uint8_t method = r.u8();
  if (method > 1) raise(ErrorKind::Format, "map entry '" + e.place_id + "' has unknown method");
  e.method = static_cast<FactorMethod>(method);
  e.rank = r.u32();
  const std::uint32_t m = r.u32();
  if (e.rank < 1 || e.rank > m || m > n) {
    raise(ErrorKind::Format, "map entry '" + e.place_id + "' has inconsistent rank/columns");
  }
  r.need(std::size_t{m} * 4);
  for (std::uint32_t j = 0; j < m; ++j) e.column_ids.push_back(r.str());
  const std::uint8_t flags = r.u8();
  if (flags & ~0x0F) raise(ErrorKind::Format, "map entry '" + e.place_id + "' has unknown flags");
  const std::uint32_t retained = r.u32();
  if (retained > e.rank) raise(ErrorKind::Format, "map entry '" + e.place_id + "' retains too many columns");
  e.retained = read_block<std::uint32_t>(r, retained);
  for (std::uint32_t idx : e.retained) {
    if (idx >= m) raise(ErrorKind::Format, "map entry '" + e.place_id + "' retained index out of range");
  }
  if (flags & kHeadings) e.column_headings = read_block<double>(r, m);
  if (flags & kR) e.r_factor = read_block<double>(r, std::size_t{e.rank} * m);
  if (flags & kSigma) e.singular_values = read_block<double>(r, m);
  if (flags & kSources) e.sources = read_block<float>(r, std::size_t{m} * n);
  e.q = read_block<float>(r, std::size_t{e.rank} * n);
  return e;
}

}  // namespace

std::vector<std::uint8_t> serialize_map(const MapIndex& map) {
  io::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(map.dimension()));
  w.u64(map.subspace_count());
  w.str(map.config().to_json());
  for (const auto& e : map.entries()) write_entry(w, *e);
  return w.take();
}

MapIndex deserialize_map(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "map");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) raise(ErrorKind::Format, "map: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) raise(ErrorKind::Format, "map: unsupported version " + std::to_string(version));
  const std::uint32_t n = r.u32();
  if (n == 0) raise(ErrorKind::Format, "map: zero dimension");
  const std::uint64_t count = r.u64();
  MapBuildConfig config = MapBuildConfig::from_json(r.str());
  std::vector<std::shared_ptr<const MapSubspace>> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    entries.push_back(std::make_shared<const MapSubspace>(read_entry(r, n)));
  }
  if (r.remaining() != 0) {
    raise(ErrorKind::Format, "map: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return MapIndex(n, std::move(config), std::move(entries));
}

void save_map(const MapIndex& map, const std::filesystem::path& path) {
  io::write_file(path.string(), serialize_map(map));
}

MapIndex load_map(const std::filesystem::path& path) {
  return deserialize_map(io::read_file(path.string()));
}

}  // namespace placemap
