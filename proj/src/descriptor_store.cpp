#include "placemap/descriptor_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <Eigen/Dense>
#include <json.hpp>

#include "placemap/binary_io.hpp"
#include "placemap/error.hpp"

namespace placemap {

using nlohmann::json;

DescriptorMatrix::DescriptorMatrix(std::size_t count, std::size_t dim, std::vector<float> values)
    : count_(count), dim_(dim), values_(std::move(values)) {
  if (values_.size() != count * dim) {
    raise(ErrorKind::Shape, "descriptor block holds " + std::to_string(values_.size()) +
                                " reals, expected " + std::to_string(count * dim));
  }
}

// ---------------------------------------------------------------------------
// .vprd

namespace {

constexpr char kVprdMagic[4] = {'V', 'P', 'R', 'D'};

DescriptorMatrix parse_vprd(std::span<const std::uint8_t> data, const std::string& what) {
  io::ByteReader in(data, what);
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kVprdMagic, 4) != 0) raise(ErrorKind::Format, what + ": bad magic");
  const std::uint32_t version = in.u32();
  if (version != kVprdVersion) {
    raise(ErrorKind::Format, what + ": unsupported version " + std::to_string(version));
  }
  const std::size_t n = in.u32();
  const std::size_t count = in.u64();
  const std::size_t expected = count * n * sizeof(float);
  if (in.remaining() != expected) {
    raise(ErrorKind::Shape, what + ": block has " + std::to_string(in.remaining()) +
                                " payload bytes, header implies " + std::to_string(expected));
  }
  std::vector<float> values(count * n);
  in.f32s(values);
  return DescriptorMatrix(count, n, std::move(values));
}

}  // namespace

DescriptorMatrix read_vprd(const std::filesystem::path& path) {
  return parse_vprd(io::read_file(path.string()), path.string());
}

void write_vprd(const DescriptorMatrix& m, const std::filesystem::path& path) {
  io::ByteWriter out;
  out.bytes(kVprdMagic, 4);
  out.u32(kVprdVersion);
  out.u32(static_cast<std::uint32_t>(m.dim()));
  out.u64(m.count());
  out.f32s(m.values());
  io::write_file(path.string(), out.buffer());
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

json record_to_json(const ImageRecord& r) {
  json j;
  j["image_id"] = r.image_id;
  j["place_id"] = r.place_id;
  if (r.heading_deg) j["heading_deg"] = *r.heading_deg;
  if (r.pitch_deg) j["pitch_deg"] = *r.pitch_deg;
  if (r.coords) {
    if (r.coords->kind == Coordinates::Kind::Geographic) {
      j["coords"] = {{"lat", r.coords->a}, {"lon", r.coords->b}};
    } else {
      j["coords"] = {{"x", r.coords->a}, {"y", r.coords->b}};
    }
  }
  if (r.date) j["date"] = *r.date;
  if (r.condition) j["condition"] = *r.condition;
  j["descriptor_index"] = r.descriptor_index;
  return j;
}

ImageRecord record_from_json(const json& j) {
  ImageRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.place_id = j.at("place_id").get<std::string>();
  if (j.contains("heading_deg")) r.heading_deg = j["heading_deg"].get<double>();
  if (j.contains("pitch_deg")) r.pitch_deg = j["pitch_deg"].get<double>();
  if (j.contains("coords")) {
    const json& c = j["coords"];
    if (c.contains("lat")) {
      r.coords = Coordinates{Coordinates::Kind::Geographic, c.at("lat").get<double>(),
                             c.at("lon").get<double>()};
    } else {
      r.coords = Coordinates{Coordinates::Kind::Planar, c.at("x").get<double>(),
                             c.at("y").get<double>()};
    }
  }
  if (j.contains("date")) r.date = j["date"].get<std::string>();
  if (j.contains("condition")) r.condition = j["condition"].get<std::string>();
  r.descriptor_index = j.at("descriptor_index").get<std::uint64_t>();
  return r;
}

void validate_manifest(const DatasetManifest& m) {
  if (m.format_version != kManifestVersion) {
    raise(ErrorKind::Format, "unsupported manifest version " + std::to_string(m.format_version));
  }
  if (m.count != m.records.size()) {
    raise(ErrorKind::Shape, "manifest count " + std::to_string(m.count) + " but " +
                                std::to_string(m.records.size()) + " records");
  }
  std::unordered_set<std::string> ids;
  for (const ImageRecord& r : m.records) {
    if (!ids.insert(r.image_id).second) {
      raise(ErrorKind::Format, "duplicate image_id '" + r.image_id + "'");
    }
    if (r.descriptor_index >= m.count) {
      raise(ErrorKind::Format, "record '" + r.image_id + "' descriptor_index out of range");
    }
    if (r.heading_deg && !(*r.heading_deg >= 0.0 && *r.heading_deg < 360.0)) {
      raise(ErrorKind::Data, "record '" + r.image_id + "' heading outside [0, 360)");
    }
  }
  if (m.sequence_order) {
    for (const std::string& id : *m.sequence_order) {
      if (!ids.contains(id)) raise(ErrorKind::Format, "sequence_order names unknown image '" + id + "'");
    }
  }
}

// Normalizes rows in place; errors name the first record using the row.
void normalize_rows(DescriptorMatrix& block, const DatasetManifest& m) {
  std::vector<const std::string*> owner(block.count(), nullptr);
  for (const ImageRecord& r : m.records) {
    if (!owner[r.descriptor_index]) owner[r.descriptor_index] = &r.image_id;
  }
  auto name = [&](std::size_t row) {
    return owner[row] ? "'" + *owner[row] + "'" : "row " + std::to_string(row);
  };
  for (std::size_t i = 0; i < block.count(); ++i) {
    std::span<float> v = block.row(i);
    double ss = 0.0;
    for (float x : v) {
      if (!std::isfinite(x)) raise(ErrorKind::Data, "non-finite entry in descriptor of " + name(i));
      ss += static_cast<double>(x) * x;
    }
    const double norm = std::sqrt(ss);
    if (norm == 0.0) raise(ErrorKind::Degenerate, "zero-norm descriptor for " + name(i));
    if (std::abs(norm - 1.0) <= kUnitTolerance) continue;
    for (float& x : v) x = static_cast<float>(static_cast<double>(x) / norm);
  }
}

}  // namespace

DatasetManifest parse_manifest(const std::string& json_text) {
  DatasetManifest m;
  try {
    const json j = json::parse(json_text);
    m.format_version = j.at("format_version").get<std::uint32_t>();
    m.dimension = j.at("dimension").get<std::size_t>();
    m.count = j.at("count").get<std::size_t>();
    for (const json& r : j.at("records")) m.records.push_back(record_from_json(r));
    if (j.contains("sequence_order")) {
      m.sequence_order = j["sequence_order"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    raise(ErrorKind::Format, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["dimension"] = m.dimension;
  j["count"] = m.count;
  json records = json::array();
  for (const ImageRecord& r : m.records) records.push_back(record_to_json(r));
  j["records"] = std::move(records);
  if (m.sequence_order) j["sequence_order"] = *m.sequence_order;
  return j.dump(1) + "\n";
}

Dataset make_dataset(std::vector<ImageRecord> records, DescriptorMatrix descriptors,
                     std::optional<std::vector<std::string>> sequence_order) {
  Dataset d;
  d.manifest.dimension = descriptors.dim();
  d.manifest.count = records.size();
  d.manifest.records = std::move(records);
  d.manifest.sequence_order = std::move(sequence_order);
  if (descriptors.count() != d.manifest.count) {
    raise(ErrorKind::Shape, "descriptor count " + std::to_string(descriptors.count()) +
                                " differs from record count " + std::to_string(d.manifest.count));
  }
  validate_manifest(d.manifest);
  normalize_rows(descriptors, d.manifest);
  d.descriptors = std::move(descriptors);
  return d;
}

Dataset load_dataset(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& block_path) {
  const auto text = io::read_file(manifest_path.string());
  DatasetManifest m = parse_manifest(std::string(text.begin(), text.end()));
  validate_manifest(m);
  DescriptorMatrix block = read_vprd(block_path);
  if (block.dim() != m.dimension) {
    raise(ErrorKind::Shape, "block dimension " + std::to_string(block.dim()) +
                                " differs from manifest dimension " + std::to_string(m.dimension));
  }
  if (block.count() != m.count) {
    raise(ErrorKind::Shape, "block holds " + std::to_string(block.count()) +
                                " descriptors, manifest declares " + std::to_string(m.count));
  }
  normalize_rows(block, m);
  return Dataset{std::move(m), std::move(block)};
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& block_path) {
  const std::string text = manifest_to_json(dataset.manifest);
  io::write_file(manifest_path.string(),
                 {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  write_vprd(dataset.descriptors, block_path);
}

Dataset load_dataset_dir(const std::filesystem::path& dir) {
  return load_dataset(dir / "manifest.json", dir / "descriptors.vprd");
}

void save_dataset_dir(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dataset(dataset, dir / "manifest.json", dir / "descriptors.vprd");
}

// ---------------------------------------------------------------------------
// Normalization and reduction

std::vector<double> normalize(std::span<const double> v) {
  double ss = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) raise(ErrorKind::Data, "non-finite vector entry");
    ss += x * x;
  }
  const double norm = std::sqrt(ss);
  if (norm == 0.0) raise(ErrorKind::Degenerate, "cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  if (std::abs(norm - 1.0) <= 1e-12) return out;
  for (double& x : out) x /= norm;
  return out;
}

namespace {

void renormalize_into(std::span<const double> y, std::span<float> out) {
  double ss = 0.0;
  for (double x : y) ss += x * x;
  const double norm = std::sqrt(ss);
  if (norm == 0.0) raise(ErrorKind::Degenerate, "reduced descriptor has zero norm");
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<float>(y[i] / norm);
}

}  // namespace

PcaProjection PcaProjection::fit(const DescriptorMatrix& m, std::size_t k) {
  const std::size_t n = m.dim();
  const std::size_t count = m.count();
  if (k < 1 || k > n) raise(ErrorKind::Parameter, "pca target dimension out of range");
  if (count < k) {
    raise(ErrorKind::Rank, "pca to " + std::to_string(k) + " dims needs at least " +
                               std::to_string(k) + " descriptors, got " + std::to_string(count));
  }
  Eigen::MatrixXd x(n, count);
  for (std::size_t c = 0; c < count; ++c) {
    auto row = m.row(c);
    for (std::size_t i = 0; i < n; ++i) x(i, c) = row[i];
  }

  Eigen::MatrixXd basis(n, k);
  if (count < n) {
    // Gram route: eigenvectors of X^T X lifted through X.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double top = std::max(lambda(count - 1), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const Eigen::Index src = static_cast<Eigen::Index>(count - 1 - j);
      if (!(lambda(src) > 1e-12 * top) || top == 0.0) {
        raise(ErrorKind::Rank, "descriptor matrix has rank below the pca target");
      }
      basis.col(j) = x * eig.eigenvectors().col(src) / std::sqrt(lambda(src));
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x * x.transpose());
    for (std::size_t j = 0; j < k; ++j) basis.col(j) = eig.eigenvectors().col(n - 1 - j);
  }

  PcaProjection p;
  p.n_ = n;
  p.k_ = k;
  p.basis_.resize(k * n);
  for (std::size_t j = 0; j < k; ++j) {
    // Sign convention: largest-magnitude coordinate positive.
    Eigen::Index arg = 0;
    basis.col(j).cwiseAbs().maxCoeff(&arg);
    const double sign = basis(arg, j) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) p.basis_[j * n + i] = sign * basis(i, j);
  }
  return p;
}

DescriptorMatrix PcaProjection::apply(const DescriptorMatrix& m) const {
  if (m.dim() != n_) raise(ErrorKind::Shape, "pca input dimension mismatch");
  DescriptorMatrix out(m.count(), k_);
  std::vector<double> y(k_);
  for (std::size_t c = 0; c < m.count(); ++c) {
    auto row = m.row(c);
    for (std::size_t j = 0; j < k_; ++j) {
      const double* b = basis_.data() + j * n_;
      double s = 0.0;
      for (std::size_t i = 0; i < n_; ++i) s += b[i] * row[i];
      y[j] = s;
    }
    renormalize_into(y, out.row(c));
  }
  return out;
}

DescriptorMatrix reduce_dimension(const DescriptorMatrix& m, ReduceMethod method, std::size_t k) {
  if (k < 1 || k >= m.dim()) {
    raise(ErrorKind::Parameter, "target dimension " + std::to_string(k) + " must lie in [1, " +
                                    std::to_string(m.dim()) + ")");
  }
  if (method == ReduceMethod::Pca) return PcaProjection::fit(m, k).apply(m);

  DescriptorMatrix out(m.count(), k);
  std::vector<double> y(k);
  for (std::size_t c = 0; c < m.count(); ++c) {
    auto row = m.row(c);
    for (std::size_t i = 0; i < k; ++i) y[i] = row[i];
    renormalize_into(y, out.row(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filtering

bool ReferenceFilter::accepts(const ImageRecord& r) const {
  if (headings && (!r.heading_deg || !headings->contains(*r.heading_deg))) return false;
  if (dates && (!r.date || !dates->contains(*r.date))) return false;
  if (conditions && (!r.condition || !conditions->contains(*r.condition))) return false;
  return true;
}

std::string ReferenceFilter::describe() const {
  std::ostringstream os;
  auto emit = [&](const char* key, const auto& values) {
    if (os.tellp() > 0) os << ';';
    os << key << '=';
    bool first = true;
    for (const auto& v : values) {
      os << (first ? "" : "+") << v;
      first = false;
    }
  };
  if (headings) emit("heading", *headings);
  if (dates) emit("date", *dates);
  if (conditions) emit("condition", *conditions);
  const std::string s = os.str();
  return s.empty() ? "all" : s;
}

ReferenceFilter parse_filter(const std::string& spec) {
  ReferenceFilter f;
  if (spec.empty() || spec == "all") return f;
  std::stringstream clauses(spec);
  std::string clause;
  while (std::getline(clauses, clause, ';')) {
    const auto eq = clause.find('=');
    if (eq == std::string::npos) raise(ErrorKind::Config, "filter clause '" + clause + "' lacks '='");
    const std::string key = clause.substr(0, eq);
    std::stringstream values(clause.substr(eq + 1));
    std::string v;
    std::set<std::string> items;
    while (std::getline(values, v, '+')) {
      if (!v.empty()) items.insert(v);
    }
    if (items.empty()) raise(ErrorKind::Config, "filter clause '" + clause + "' has no values");
    if (key == "condition") {
      f.conditions = items;
    } else if (key == "date") {
      f.dates = items;
    } else if (key == "heading") {
      std::set<double> hs;
      for (const std::string& s : items) {
        try {
          hs.insert(std::stod(s));
        } catch (...) {
          raise(ErrorKind::Config, "bad heading '" + s + "' in filter");
        }
      }
      f.headings = hs;
    } else {
      raise(ErrorKind::Config, "unknown filter key '" + key + "'");
    }
  }
  return f;
}

DescriptorMatrix descriptors_in_record_order(const Dataset& dataset) {
  DescriptorMatrix out(dataset.size(), dataset.dim());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto src = dataset.descriptor(i);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Dataset with_descriptors(const Dataset& dataset, DescriptorMatrix rows) {
  if (rows.count() != dataset.size()) raise(ErrorKind::Shape, "replacement block row count mismatch");
  std::vector<ImageRecord> records = dataset.manifest.records;
  for (std::size_t i = 0; i < records.size(); ++i) records[i].descriptor_index = i;
  return make_dataset(std::move(records), std::move(rows), dataset.manifest.sequence_order);
}

Dataset filter_dataset(const Dataset& dataset, const ReferenceFilter& filter) {
  std::vector<ImageRecord> records;
  std::vector<float> values;
  std::unordered_set<std::string> kept;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!filter.accepts(dataset.record(i))) continue;
    ImageRecord r = dataset.record(i);
    r.descriptor_index = records.size();
    auto row = dataset.descriptor(i);
    values.insert(values.end(), row.begin(), row.end());
    kept.insert(r.image_id);
    records.push_back(std::move(r));
  }
  std::optional<std::vector<std::string>> order;
  if (dataset.manifest.sequence_order) {
    order.emplace();
    for (const std::string& id : *dataset.manifest.sequence_order) {
      if (kept.contains(id)) order->push_back(id);
    }
  }
  const std::size_t count = records.size();
  return make_dataset(std::move(records), DescriptorMatrix(count, dataset.dim(), std::move(values)),
                      std::move(order));
}

}  // namespace placemap
