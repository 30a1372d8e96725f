#include "coldrec/embeddings/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>

namespace coldrec::embeddings {

namespace {

bool is_unicode_space(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 ||
         cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 ||
         cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

// Decodes one UTF-8 sequence at text[i]; returns its length (1 for bytes
// that do not start a valid sequence).
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = 0xFFFD;
    return 1;
  }
  if (i + len > text.size()) {
    cp = 0xFFFD;
    return 1;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, i, cp);
    if (is_unicode_space(cp)) {
      flush();
    } else if (len == 1 && cp < 0x80) {
      const auto c = static_cast<unsigned char>(text[i]);
      if (!std::ispunct(c)) current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      current.append(text.substr(i, len));
    }
    i += len;
  }
  flush();
  return tokens;
}

TfidfVocabulary build_tfidf_vocabulary(const std::vector<TextDocument>& corpus,
                                       std::size_t vocab_size) {
  if (corpus.empty()) throw ArgumentError("tfidf_encode: empty corpus");
  if (vocab_size == 0) throw ArgumentError("tfidf_encode: vocab_size must be positive");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    const auto toks = tokenize(doc.text);
    for (const auto& t : std::set<std::string>(toks.begin(), toks.end())) ++df[t];
  }
  if (df.empty()) throw ArgumentError("tfidf_encode: empty vocabulary (all documents empty)");

  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(std::min(vocab_size, ranked.size()));

  TfidfVocabulary vocab;
  const double n = static_cast<double>(corpus.size());
  for (const auto& [token, count] : ranked) {
    vocab.tokens.push_back(token);
    vocab.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return vocab;
}

std::vector<ModalityEmbedding> tfidf_encode(const std::vector<TextDocument>& corpus,
                                            std::size_t vocab_size) {
  const TfidfVocabulary vocab = build_tfidf_vocabulary(corpus, vocab_size);
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < vocab.tokens.size(); ++k) index[vocab.tokens[k]] = k;

  std::vector<ModalityEmbedding> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) {
    Vector v(vocab.tokens.size(), 0.0);
    for (const auto& t : tokenize(doc.text)) {
      auto it = index.find(t);
      if (it != index.end()) v[it->second] += 1.0;
    }
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= vocab.idf[k];
    const double n = norm2(v);
    if (n > 0.0) {
      for (double& x : v) x /= n;
    }
    out.push_back(ModalityEmbedding{doc.entity_id, doc.entity_kind, Modality::kText,
                                    std::move(v)});
  }
  return out;
}

namespace {

// Next whitespace-separated header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c = 0;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

std::size_t pgm_number(std::istream& in, const char* what) {
  const std::string tok = pgm_token(in);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), ::isdigit)) {
    throw ParseError(std::string("PGM: bad ") + what + " '" + tok + "'", 0);
  }
  return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace

GrayImage parse_pgm(std::istream& in) {
  const std::string magic = pgm_token(in);
  if (magic != "P2" && magic != "P5") {
    throw ParseError("PGM: unsupported magic '" + magic + "'", 0);
  }
  GrayImage img;
  img.cols = pgm_number(in, "width");
  img.rows = pgm_number(in, "height");
  const std::size_t maxval = pgm_number(in, "maxval");
  if (maxval == 0 || maxval > 65535) throw ParseError("PGM: maxval out of range", 0);
  img.max_value = static_cast<double>(maxval);
  img.pixels.resize(img.rows * img.cols);
  if (magic == "P2") {
    for (double& p : img.pixels) p = static_cast<double>(pgm_number(in, "pixel"));
  } else {
    const bool wide = maxval > 255;
    for (double& p : img.pixels) {
      int hi = in.get();
      if (hi == EOF) throw ParseError("PGM: truncated pixel data", 0);
      if (wide) {
        const int lo = in.get();
        if (lo == EOF) throw ParseError("PGM: truncated pixel data", 0);
        hi = (hi << 8) | lo;
      }
      p = static_cast<double>(hi);
    }
  }
  for (double p : img.pixels) {
    if (p > img.max_value) throw ParseError("PGM: pixel exceeds maxval", 0);
  }
  return img;
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open image '" + path + "'", 0);
  return parse_pgm(in);
}

Vector pixel_encode(const GrayImage& image, std::size_t grid) {
  if (grid == 0) throw ArgumentError("pixel_encode: grid must be positive");
  if (image.rows < grid || image.cols < grid) {
    throw ArgumentError("pixel_encode: image " + std::to_string(image.rows) + "x" +
                        std::to_string(image.cols) + " is smaller than " +
                        std::to_string(grid) + "x" + std::to_string(grid));
  }
  if (image.pixels.size() != image.rows * image.cols) {
    throw ShapeError("pixel_encode: pixel buffer does not match image shape");
  }
  Vector out(grid * grid, 0.0);
  for (std::size_t gr = 0; gr < grid; ++gr) {
    const std::size_t r0 = gr * image.rows / grid;
    const std::size_t r1 = (gr + 1) * image.rows / grid;
    for (std::size_t gc = 0; gc < grid; ++gc) {
      const std::size_t c0 = gc * image.cols / grid;
      const std::size_t c1 = (gc + 1) * image.cols / grid;
      double sum = 0.0;
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) sum += image.at(r, c);
      }
      const double cells = static_cast<double>((r1 - r0) * (c1 - c0));
      out[gr * grid + gc] = sum / cells / image.max_value;
    }
  }
  return out;
}

}  // namespace coldrec::embeddings
