#include "engpred/feature_block.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "engpred/errors.hpp"

namespace engpred {

namespace {
constexpr char kMagic[8] = {'E', 'N', 'G', 'F', 'B', 'L', 'K', '1'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw DataError("feature block file truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}
}  // namespace

void FeatureBlock::add_column(std::string name, std::vector<double> values) {
  if (cols.empty()) {
    rows = values.size();
  } else if (values.size() != rows) {
    throw DataError("column " + name + " has " + std::to_string(values.size()) +
                    " rows, block has " + std::to_string(rows));
  }
  names.push_back(std::move(name));
  cols.push_back(std::move(values));
}

void FeatureBlock::save(const std::string& path) const {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, 1);  // version
  put<std::uint64_t>(out, rows);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(cols.size()));
  for (const auto& n : names) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(n.size()));
    out.append(n);
  }
  for (const auto& c : cols)
    out.append(reinterpret_cast<const char*>(c.data()), c.size() * sizeof(double));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed: " + path);

  nlohmann::json side;
  side["rows"] = rows;
  side["columns"] = names;
  std::ofstream js(path + ".json", std::ios::trunc);
  js << side.dump(2) << "\n";
}

FeatureBlock FeatureBlock::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a feature block file: " + path);
  std::size_t off = sizeof(kMagic);
  auto version = take<std::uint32_t>(in, off);
  if (version != 1) throw DataError("unsupported feature block version");
  FeatureBlock b;
  b.rows = take<std::uint64_t>(in, off);
  auto n_cols = take<std::uint32_t>(in, off);
  b.names.reserve(n_cols);
  for (std::uint32_t i = 0; i < n_cols; ++i) {
    auto len = take<std::uint32_t>(in, off);
    if (off + len > in.size()) throw DataError("feature block file truncated");
    b.names.emplace_back(in.data() + off, len);
    off += len;
  }
  b.cols.assign(n_cols, std::vector<double>(b.rows));
  for (auto& c : b.cols) {
    if (off + c.size() * sizeof(double) > in.size())
      throw DataError("feature block file truncated");
    std::memcpy(c.data(), in.data() + off, c.size() * sizeof(double));
    off += c.size() * sizeof(double);
  }
  return b;
}

void FeatureBlock::write_tsv(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  for (std::size_t c = 0; c < names.size(); ++c) f << (c ? "\t" : "") << names[c];
  f << "\n";
  char buf[64];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) f << '\t';
      double v = cols[c][r];
      if (is_missing(v)) {
        f << "NA";
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        f << buf;
      }
    }
    f << "\n";
  }
}

}  // namespace engpred
