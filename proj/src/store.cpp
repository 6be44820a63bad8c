#include "facetvec/store.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "facetvec/rng.hpp"

namespace facetvec {

EmbeddingStore init_random(std::uint32_t nodes, std::uint32_t dim, std::uint32_t aspects,
                           std::uint64_t seed, double scale) {
  if (nodes == 0 || dim == 0 || aspects == 0)
    throw std::invalid_argument("init_random: nodes, dim, aspects must be positive");
  if (scale < 0) scale = 0.5 / dim;

  EmbeddingStore s;
  s.nodes = nodes;
  s.dim = dim;
  s.aspects = aspects;
  s.target.resize(static_cast<std::size_t>(nodes) * dim);
  s.aspect_context.resize(static_cast<std::size_t>(aspects) * nodes * dim);

  auto fill = [scale](std::span<float> out, std::uint64_t stream) {
    Rng rng(stream);
    for (float& x : out) x = static_cast<float>((2.0 * rng.next_double() - 1.0) * scale);
  };
  fill(s.target, derive_stream(seed, kStreamInit, 0));
  for (std::uint32_t a = 0; a < aspects; ++a)
    fill(std::span<float>(s.aspect_context.data() + static_cast<std::size_t>(a) * nodes * dim,
                          static_cast<std::size_t>(nodes) * dim),
         derive_stream(seed, kStreamInit, 1 + a));
  return s;
}

void finalize(EmbeddingStore& s) {
  s.fused.assign(static_cast<std::size_t>(s.nodes) * s.dim, 0.0f);
  const double inv_k = 1.0 / s.aspects;
  for (std::uint32_t i = 0; i < s.nodes; ++i) {
    auto t = s.target_row(i);
    float* out = s.fused.data() + static_cast<std::size_t>(i) * s.dim;
    for (std::uint32_t k = 0; k < s.dim; ++k) {
      double acc = 0.0;
      for (std::uint32_t a = 0; a < s.aspects; ++a) acc += s.context_row(a, i)[k];
      out[k] = static_cast<float>(t[k] + acc * inv_k);
    }
  }
}

void export_word2vec(std::ostream& out, const float* values, std::uint32_t rows, std::uint32_t dim,
                     const std::vector<std::string>& names) {
  if (names.size() != rows)
    throw std::invalid_argument("export_word2vec: names/rows mismatch");
  out << rows << ' ' << dim << '\n';
  char buf[32];
  for (std::uint32_t i = 0; i < rows; ++i) {
    out << names[i];
    const float* row = values + static_cast<std::size_t>(i) * dim;
    for (std::uint32_t k = 0; k < dim; ++k) {
      std::snprintf(buf, sizeof buf, " %.6g", static_cast<double>(row[k]));
      out << buf;
    }
    out << '\n';
  }
}

void export_word2vec_file(const std::string& path, const float* values, std::uint32_t rows,
                          std::uint32_t dim, const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path);
  export_word2vec(out, values, rows, dim, names);
}

NamedMatrix import_word2vec(std::istream& in) {
  NamedMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("embedding file: empty");
  {
    std::istringstream ss(line);
    if (!(ss >> m.rows >> m.dim) || m.rows == 0 || m.dim == 0)
      throw std::runtime_error("embedding file: bad header '" + line + "'");
  }
  m.values.reserve(static_cast<std::size_t>(m.rows) * m.dim);
  m.names.reserve(m.rows);
  for (std::uint32_t i = 0; i < m.rows; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("embedding file: expected " + std::to_string(m.rows) +
                               " rows, got " + std::to_string(i));
    std::istringstream ss(line);
    std::string name;
    if (!(ss >> name))
      throw std::runtime_error("embedding file: blank row " + std::to_string(i + 1));
    m.names.push_back(name);
    for (std::uint32_t k = 0; k < m.dim; ++k) {
      float v;
      if (!(ss >> v))
        throw std::runtime_error("embedding file: row '" + name + "' has fewer than " +
                                 std::to_string(m.dim) + " values");
      m.values.push_back(v);
    }
    float extra;
    if (ss >> extra)
      throw std::runtime_error("embedding file: row '" + name + "' has more than " +
                               std::to_string(m.dim) + " values");
  }
  return m;
}

NamedMatrix import_word2vec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  try {
    return import_word2vec(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace facetvec
