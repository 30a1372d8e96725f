#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "coldrec/embeddings/embedding.hpp"

namespace coldrec::embeddings {

// Built-in encoders that need no pretrained models.

// Splits on Unicode whitespace (UTF-8 input), removes ASCII punctuation,
// lowercases ASCII letters and drops empty tokens.
std::vector<std::string> tokenize(std::string_view text);

struct TextDocument {
  std::string entity_id;
  EntityKind entity_kind = EntityKind::kItem;
  std::string text;
};

struct TfidfVocabulary {
  std::vector<std::string> tokens;  // coordinate order
  Vector idf;
};

// Top `vocab_size` tokens by document frequency (ties: lexicographic), with
// idf = ln((1 + N) / (1 + df)) + 1.
TfidfVocabulary build_tfidf_vocabulary(const std::vector<TextDocument>& corpus,
                                       std::size_t vocab_size);

// One text embedding per document: raw term counts times idf, L2-normalised;
// a document with no in-vocabulary token maps to the zero vector.
std::vector<ModalityEmbedding> tfidf_encode(const std::vector<TextDocument>& corpus,
                                            std::size_t vocab_size);

struct GrayImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double max_value = 255.0;
  std::vector<double> pixels;  // row-major

  double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
};

// Plain (P2) and raw (P5) PGM.
GrayImage parse_pgm(std::istream& in);
GrayImage read_pgm(const std::string& path);

inline constexpr std::size_t kPixelGrid = 8;

// Mean-pools to a grid x grid layout, flattens row-major and divides by the
// image's max value. Images smaller than the grid are rejected.
Vector pixel_encode(const GrayImage& image, std::size_t grid = kPixelGrid);

}  // namespace coldrec::embeddings
