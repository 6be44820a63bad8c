#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace facetvec {

// Model parameters: one target vector per node plus `aspects` context
// vectors per node. All matrices are row-major float32; the fused output
// matrix is filled by finalize() and does not participate in training.
struct EmbeddingStore {
  std::uint32_t nodes = 0;
  std::uint32_t dim = 0;
  std::uint32_t aspects = 0;

  std::vector<float> target;           // nodes x dim
  std::vector<float> aspect_context;   // aspects x nodes x dim, aspect-major
  std::vector<float> fused;            // nodes x dim, empty until finalize()

  std::span<float> target_row(std::uint32_t i) {
    return {target.data() + static_cast<std::size_t>(i) * dim, dim};
  }
  std::span<const float> target_row(std::uint32_t i) const {
    return {target.data() + static_cast<std::size_t>(i) * dim, dim};
  }
  std::span<float> context_row(std::uint32_t aspect, std::uint32_t i) {
    return {aspect_context.data() +
                (static_cast<std::size_t>(aspect) * nodes + i) * dim,
            dim};
  }
  std::span<const float> context_row(std::uint32_t aspect, std::uint32_t i) const {
    return {aspect_context.data() +
                (static_cast<std::size_t>(aspect) * nodes + i) * dim,
            dim};
  }
  std::span<const float> fused_row(std::uint32_t i) const {
    return {fused.data() + static_cast<std::size_t>(i) * dim, dim};
  }

  // Trainable parameters: nodes * dim * (aspects + 1).
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(nodes) * dim * (aspects + 1);
  }
};

// Uniform init in [-scale, scale] per entry; scale < 0 selects the default
// 0.5 / dim. scale == 0 yields all-zero matrices. Deterministic in seed and
// independent of traversal order (one stream per matrix).
EmbeddingStore init_random(std::uint32_t nodes, std::uint32_t dim, std::uint32_t aspects,
                           std::uint64_t seed, double scale = -1.0);

// fused_i = target_i + mean over aspects of context_i. Recomputes from the
// current matrices, so calling it twice changes nothing.
void finalize(EmbeddingStore& s);

// Word2vec text format: header "<rows> <dim>", then one "name v1 .. vdim"
// line per row, values printed to 6 significant digits (round-trips float32
// idempotently: a re-export of an import is byte-identical).
void export_word2vec(std::ostream& out, const float* values, std::uint32_t rows, std::uint32_t dim,
                     const std::vector<std::string>& names);
void export_word2vec_file(const std::string& path, const float* values, std::uint32_t rows,
                          std::uint32_t dim, const std::vector<std::string>& names);

struct NamedMatrix {
  std::uint32_t rows = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;
  std::vector<std::string> names;
};

NamedMatrix import_word2vec(std::istream& in);
NamedMatrix import_word2vec_file(const std::string& path);

}  // namespace facetvec
