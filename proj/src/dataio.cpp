#include "imagehd/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace imagehd {

namespace {

constexpr char kMagic[4] = {'I', 'H', 'D', 'F'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagLabels = 1;
// magic(4) + version(2) + flags(2) + n(4) + f(4)
constexpr std::size_t kHeaderBytes = 16;

bool has_csv_extension(const std::string& path) {
  if (path.size() < 4) return false;
  std::string ext = path.substr(path.size() - 4);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return ext == ".csv";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? std::string() : f.substr(a, b - a + 1);
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

Dataset read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open");

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line != "\r") lines.push_back(line);
  }
  if (lines.empty()) throw std::runtime_error(path + ": empty CSV file");

  // A header is any first row that does not parse as numbers throughout.
  const auto first = split_csv_line(lines[0]);
  bool has_header = false;
  for (const auto& f : first) {
    double v;
    if (!parse_double(f, v)) {
      has_header = true;
      break;
    }
  }
  const bool has_labels = has_header && first.back() == "label";
  const std::size_t n_cols = first.size();
  const std::size_t n_features = has_labels ? n_cols - 1 : n_cols;
  if (n_features == 0) throw std::runtime_error(path + ": CSV has no feature columns");

  Dataset ds;
  if (has_labels) ds.labels.emplace();
  for (std::size_t row = has_header ? 1 : 0; row < lines.size(); ++row) {
    const auto fields = split_csv_line(lines[row]);
    if (fields.size() != n_cols)
      throw std::runtime_error(path + ": row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " columns, expected " +
                               std::to_string(n_cols));
    FeatureVector z(n_features);
    for (std::size_t i = 0; i < n_features; ++i) {
      if (!parse_double(fields[i], z[i]) || !std::isfinite(z[i]))
        throw std::runtime_error(path + ": row " + std::to_string(row) +
                                 ": bad feature value '" + fields[i] + "'");
    }
    if (has_labels) {
      double v;
      if (!parse_double(fields.back(), v) || v < 0 || v != std::floor(v))
        throw std::runtime_error(path + ": row " + std::to_string(row) + ": bad label '" +
                                 fields.back() + "'");
      ds.labels->push_back(static_cast<std::uint32_t>(v));
    }
    ds.features.push_back(std::move(z));
  }
  if (ds.features.empty()) throw std::runtime_error(path + ": CSV contains no data rows");
  return ds;
}

template <typename T>
T read_le_at(const std::vector<char>& buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

}  // namespace

Dataset read_features(const std::string& path) {
  if (has_csv_extension(path)) return read_csv(path);

  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  if (buf.size() < kHeaderBytes)
    throw std::runtime_error(path + ": truncated header, " + std::to_string(buf.size()) +
                             " bytes before offset " + std::to_string(kHeaderBytes));
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw std::runtime_error(path + ": bad magic at offset 0");
  const auto version = read_le_at<std::uint16_t>(buf, 4);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version) +
                             " at offset 4");
  const auto flags = read_le_at<std::uint16_t>(buf, 6);
  const auto n = read_le_at<std::uint32_t>(buf, 8);
  const auto f = read_le_at<std::uint32_t>(buf, 12);
  if (n == 0 || f == 0) throw std::runtime_error(path + ": n and f must be >= 1");

  const bool has_labels = (flags & kFlagLabels) != 0;
  const std::size_t expected = kHeaderBytes + static_cast<std::size_t>(n) * f * 4 +
                               (has_labels ? static_cast<std::size_t>(n) * 4 : 0);
  if (buf.size() != expected)
    throw std::runtime_error(path + ": expected " + std::to_string(expected) + " bytes, found " +
                             std::to_string(buf.size()));

  Dataset ds;
  ds.features.reserve(n);
  std::size_t off = kHeaderBytes;
  for (std::uint32_t i = 0; i < n; ++i) {
    FeatureVector z(f);
    for (std::uint32_t j = 0; j < f; ++j, off += 4) {
      const float v = read_le_at<float>(buf, off);
      if (!std::isfinite(v))
        throw std::runtime_error(path + ": non-finite value at row " + std::to_string(i));
      z[j] = v;
    }
    ds.features.push_back(std::move(z));
  }
  if (has_labels) {
    ds.labels.emplace();
    ds.labels->reserve(n);
    for (std::uint32_t i = 0; i < n; ++i, off += 4)
      ds.labels->push_back(read_le_at<std::uint32_t>(buf, off));
  }
  return ds;
}

void write_features(const std::string& path, const std::vector<FeatureVector>& features,
                    const std::optional<std::vector<std::uint32_t>>& labels) {
  if (features.empty()) throw std::invalid_argument("write_features: empty feature set");
  const std::size_t f = features.front().size();
  if (f == 0) throw std::invalid_argument("write_features: zero-dimensional features");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != f)
      throw std::invalid_argument("write_features: row " + std::to_string(i) +
                                  " has inconsistent dimension");
  }
  if (labels && labels->size() != features.size())
    throw std::invalid_argument("write_features: " + std::to_string(labels->size()) +
                                " labels for " + std::to_string(features.size()) + " vectors");

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  auto put = [&os](const void* p, std::size_t len) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
  };
  put(kMagic, 4);
  const std::uint16_t version = kVersion;
  const std::uint16_t flags = labels ? kFlagLabels : 0;
  const std::uint32_t n = static_cast<std::uint32_t>(features.size());
  const std::uint32_t fdim = static_cast<std::uint32_t>(f);
  put(&version, 2);
  put(&flags, 2);
  put(&n, 4);
  put(&fdim, 4);
  for (const auto& z : features) {
    for (double v : z) {
      const float fv = static_cast<float>(v);
      put(&fv, 4);
    }
  }
  if (labels) {
    for (std::uint32_t v : *labels) put(&v, 4);
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

namespace {

// Box-Muller over the LFSR word stream; draws map to (0, 1] so log stays
// finite. Keeps the paired variate for the next call.
class GaussianSource {
 public:
  explicit GaussianSource(Lfsr32& rng) : rng_(rng) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_.next()) + 1.0) / 4294967296.0;
    const double u2 = (static_cast<double>(rng_.next()) + 1.0) / 4294967296.0;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  Lfsr32& rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace

Dataset gen_synthetic(const SyntheticSpec& spec, std::vector<FeatureVector>* centers_out) {
  if (spec.n_classes == 0 || spec.per_class == 0 || spec.f == 0)
    throw std::invalid_argument("gen_synthetic: counts and dimension must be positive");
  if (!(spec.spread > 0.0)) throw std::invalid_argument("gen_synthetic: spread must be positive");
  if (spec.seed == 0) throw std::invalid_argument("gen_synthetic: seed must be nonzero");

  Lfsr32 rng(spec.seed);
  GaussianSource gauss(rng);

  // Unit center directions, orthogonalized while the dimension allows, then
  // scaled by 1/sqrt(2): orthonormal vectors sit at pairwise distance
  // sqrt(2), so the scaled centers sit at pairwise distance 1.
  std::vector<std::vector<double>> dirs(spec.n_classes, std::vector<double>(spec.f));
  for (std::uint32_t k = 0; k < spec.n_classes; ++k) {
    auto& c = dirs[k];
    for (;;) {
      for (auto& v : c) v = gauss.next();
      if (k < spec.f) {
        for (std::uint32_t j = 0; j < k; ++j) {
          double dot = 0.0;
          for (std::uint32_t i = 0; i < spec.f; ++i) dot += c[i] * dirs[j][i];
          for (std::uint32_t i = 0; i < spec.f; ++i) c[i] -= dot * dirs[j][i];
        }
      }
      double norm = 0.0;
      for (double v : c) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > 1e-9) {
        for (auto& v : c) v /= norm;
        break;
      }
    }
  }

  if (centers_out) {
    centers_out->assign(spec.n_classes, FeatureVector(spec.f));
    for (std::uint32_t k = 0; k < spec.n_classes; ++k)
      for (std::uint32_t i = 0; i < spec.f; ++i)
        (*centers_out)[k][i] = dirs[k][i] / std::numbers::sqrt2;
  }

  std::vector<std::vector<FeatureVector>> by_class(spec.n_classes);
  for (std::uint32_t k = 0; k < spec.n_classes; ++k) {
    by_class[k].reserve(spec.per_class);
    for (std::uint32_t s = 0; s < spec.per_class; ++s) {
      FeatureVector z(spec.f);
      for (std::uint32_t i = 0; i < spec.f; ++i) {
        // Round through f32: the container stores f32, and generated vs
        // reloaded streams must agree bit-exactly.
        z[i] = static_cast<float>(dirs[k][i] / std::numbers::sqrt2 +
                                  spec.spread * gauss.next());
      }
      by_class[k].push_back(std::move(z));
    }
  }

  Dataset ds;
  ds.labels.emplace();
  const std::size_t total = static_cast<std::size_t>(spec.n_classes) * spec.per_class;
  ds.features.reserve(total);
  ds.labels->reserve(total);
  if (spec.order == StreamOrder::kSequential) {
    for (std::uint32_t k = 0; k < spec.n_classes; ++k)
      for (auto& z : by_class[k]) {
        ds.features.push_back(std::move(z));
        ds.labels->push_back(k);
      }
  } else {
    for (std::uint32_t s = 0; s < spec.per_class; ++s)
      for (std::uint32_t k = 0; k < spec.n_classes; ++k) {
        ds.features.push_back(std::move(by_class[k][s]));
        ds.labels->push_back(k);
      }
  }
  return ds;
}

}  // namespace imagehd
