#include "hyperseq/model.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace hyperseq {

void ModelConfig::validate() const {
  if (dim < 1) throw Error(ErrorCode::kInvalidDimension, "dim must be >= 1");
  encoder().validate();
  if (n > 255 || shift > 255) throw Error(ErrorCode::kInvalidConfig, "n and shift must fit in one byte");
  if (dim > 0xFFFFFFFFLL) throw Error(ErrorCode::kInvalidConfig, "dim must fit in 32 bits");
  if (adapt_weight < 1) throw Error(ErrorCode::kInvalidConfig, "adapt_weight must be >= 1");
  if (entry_bits != 8 && entry_bits != 16 && entry_bits != 32) {
    throw Error(ErrorCode::kInvalidConfig, "entry_bits must be 8, 16 or 32");
  }
}

Model::Model(ModelConfig cfg, Codebook cb) : cfg_(cfg), cb_(std::move(cb)) {
  cfg_.validate();
  if (cb_.empty()) throw Error(ErrorCode::kEmptyCodebook, "model needs a non-empty codebook");
  detail::require_same_dim(cfg_.dim, cb_.dim(), "codebook vs model");
  base_ = Accumulator::zeros(cfg_.dim, cfg_.entry_bits);
  adaptive_ = Accumulator::zeros(cfg_.dim, cfg_.entry_bits);
}

Model Model::from_parts(ModelConfig cfg, Codebook cb, Accumulator base, Accumulator adaptive,
                        std::uint64_t train_ngram_count, std::uint64_t adapt_event_count) {
  Model m(cfg, std::move(cb));
  detail::require_same_dim(m.cfg_.dim, base.dim(), "base memory");
  detail::require_same_dim(m.cfg_.dim, adaptive.dim(), "adaptive memory");
  m.base_ = Accumulator::from_values(std::span(base.values().data(), base.values().size()), cfg.entry_bits);
  m.adaptive_ =
      Accumulator::from_values(std::span(adaptive.values().data(), adaptive.values().size()), cfg.entry_bits);
  m.train_ngram_count_ = train_ngram_count;
  m.adapt_event_count_ = adapt_event_count;
  return m;
}

Accumulator Model::memory() const {
  Accumulator sum = Accumulator::from_storage_unchecked(base_.values(), Accumulator::kMaxBits);
  sum.merge(adaptive_);
  return sum;
}

std::vector<Hypervector> Model::lookup_all(std::span<const StateLabel> labels, std::size_t arity) const {
  if (labels.size() != arity) {
    throw Error(ErrorCode::kWrongArity,
                "expected " + std::to_string(arity) + " labels, got " + std::to_string(labels.size()));
  }
  std::vector<Hypervector> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back(detail::lookup_at(cb_, labels, i));
  return out;
}

Accumulator Model::query_frequency(std::span<const StateLabel> prefix) const {
  const auto vectors = lookup_all(prefix, static_cast<std::size_t>(cfg_.n - 1));
  return bind_accumulator(memory(), encode_query(vectors, cfg_.encoder()));
}

QueryResult Model::predict_next(std::span<const StateLabel> prefix) const {
  QueryResult out;
  out.raw_r = query_frequency(prefix);
  Decoded d = decode_nearest(cb_, out.raw_r);
  out.predicted = std::move(d.label);
  out.scores = std::move(d.scores);
  return out;
}

void Model::adapt(std::span<const StateLabel> window) {
  if (!cfg_.adaptive) throw Error(ErrorCode::kAdaptationDisabled, "model was configured without adaptation");
  const auto vectors = lookup_all(window, static_cast<std::size_t>(cfg_.n));
  adaptive_.add(encode_ngram(vectors, cfg_.encoder()), cfg_.adapt_weight);
  ++adapt_event_count_;
}

void Model::reset_adaptive() {
  adaptive_.set_zero();
  adapt_event_count_ = 0;
}

void Model::add_training_encoding(const Hypervector& encoding) {
  base_.add(encoding);
  ++train_ngram_count_;
}

PartialMemory encode_sessions(std::span<const Session> sessions, const ModelConfig& cfg, const Codebook& cb) {
  cfg.validate();
  detail::require_same_dim(cfg.dim, cb.dim(), "codebook vs model");
  PartialMemory partial{Accumulator::zeros(cfg.dim, cfg.entry_bits), 0};
  const EncoderConfig enc = cfg.encoder();
  for (const auto& session : sessions) {
    for_each_ngram(session, cb, enc, [&](const Hypervector& g) {
      partial.sum.add(g);
      ++partial.windows;
    });
  }
  return partial;
}

Model train(std::span<const Session> sessions, const ModelConfig& cfg, const Codebook& cb) {
  Model m(cfg, cb);
  const EncoderConfig enc = cfg.encoder();
  for (const auto& session : sessions) {
    for_each_ngram(session, cb, enc, [&](const Hypervector& g) { m.add_training_encoding(g); });
  }
  if (m.train_ngram_count() == 0) {
    throw Error(ErrorCode::kEmptyTraining, "no training session has at least n = " + std::to_string(cfg.n) + " states");
  }
  return m;
}

// Model file --------------------------------------------------------------

namespace {

constexpr std::array<char, 4> kMagic = {'H', 'S', 'E', 'Q'};

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<char>(u & 0xFF));
      u = static_cast<decltype(u)>(u >> 8);
    }
  }
  void put_bytes(const char* data, std::size_t size) { bytes_.append(data, size); }
  void put_bits(const Hypervector& v) {
    std::string packed((static_cast<std::size_t>(v.dim()) + 7) / 8, '\0');
    for (Index i = 0; i < v.dim(); ++i) {
      if (v[i] > 0) packed[static_cast<std::size_t>(i / 8)] |= static_cast<char>(1U << (i % 8));
    }
    bytes_ += packed;
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* field) {
    need(sizeof(T), field);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(
                                                    static_cast<unsigned char>(bytes_[pos_ + i]))
                                                << (8 * i));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::string_view get_bytes(std::size_t size, const char* field) {
    need(size, field);
    auto out = bytes_.substr(pos_, size);
    pos_ += size;
    return out;
  }
  Hypervector get_bits(Index dim, const char* field) {
    const auto packed = get_bytes((static_cast<std::size_t>(dim) + 7) / 8, field);
    Hypervector::Storage values(dim);
    for (Index i = 0; i < dim; ++i) {
      values[i] = (static_cast<unsigned char>(packed[static_cast<std::size_t>(i / 8)]) >> (i % 8)) & 1U
                      ? std::int8_t{1}
                      : std::int8_t{-1};
    }
    return Hypervector::from_storage_unchecked(std::move(values));
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t size, const char* field) const {
    if (bytes_.size() - pos_ < size) throw Error(ErrorCode::kFormat, std::string("truncated at field ") + field);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

void put_accumulator(ByteWriter& w, const Accumulator& acc, int bits) {
  for (Index i = 0; i < acc.dim(); ++i) {
    switch (bits) {
      case 8: w.put(static_cast<std::int8_t>(acc[i])); break;
      case 16: w.put(static_cast<std::int16_t>(acc[i])); break;
      default: w.put(static_cast<std::int32_t>(acc[i])); break;
    }
  }
}

Accumulator get_accumulator(ByteReader& r, Index dim, int bits, const char* field) {
  Accumulator::Storage values(dim);
  for (Index i = 0; i < dim; ++i) {
    switch (bits) {
      case 8: values[i] = r.get<std::int8_t>(field); break;
      case 16: values[i] = r.get<std::int16_t>(field); break;
      default: values[i] = r.get<std::int32_t>(field); break;
    }
  }
  return Accumulator::from_values(std::span(values.data(), values.size()), bits);
}

}  // namespace

void save_model(const Model& m, std::ostream& out, const SaveOptions& opts) {
  const ModelConfig& cfg = m.config();
  ByteWriter w;
  w.put_bytes(kMagic.data(), kMagic.size());
  w.put(kModelFormatVersion);
  w.put(static_cast<std::uint32_t>(cfg.dim));
  w.put(static_cast<std::uint8_t>(cfg.n));
  w.put(static_cast<std::uint8_t>(cfg.shift));
  w.put(static_cast<std::uint8_t>(opts.sign_quantize ? 1 : cfg.entry_bits));
  w.put(static_cast<std::uint8_t>(cfg.adaptive ? 1 : 0));
  w.put(static_cast<std::uint32_t>(cfg.adapt_weight));
  w.put(cfg.seed);
  w.put(static_cast<std::uint16_t>(m.codebook().size()));
  w.put(m.train_ngram_count());
  w.put(m.adapt_event_count());
  for (const auto& label : m.codebook().labels()) {
    if (label.size() > 0xFFFF) throw Error(ErrorCode::kValidation, "label too long to store");
    w.put(static_cast<std::uint16_t>(label.size()));
    w.put_bytes(label.data(), label.size());
  }
  for (const auto& v : m.codebook().vectors()) w.put_bits(v);
  if (opts.sign_quantize) {
    SeedStream ties(cfg.seed, "tie");
    w.put_bits(sign_quantize(m.base(), ties));
    if (cfg.adaptive) w.put_bits(sign_quantize(m.adaptive(), ties));
  } else {
    put_accumulator(w, m.base(), cfg.entry_bits);
    if (cfg.adaptive) put_accumulator(w, m.adaptive(), cfg.entry_bits);
  }
  w.put(crc32_of(w.bytes()));
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing model");
}

void save_model(const Model& m, const std::filesystem::path& path, const SaveOptions& opts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  save_model(m, out, opts);
}

Model load_model(std::istream& in) {
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kMagic.size() + 4) throw Error(ErrorCode::kFormat, "file too short (magic)");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw Error(ErrorCode::kFormat, "bad magic");
  const std::string_view body(bytes.data(), bytes.size() - 4);
  ByteReader trailer(std::string_view(bytes).substr(bytes.size() - 4));
  if (trailer.get<std::uint32_t>("checksum") != crc32_of(body)) throw Error(ErrorCode::kFormat, "checksum mismatch");

  ByteReader r(body);
  r.get_bytes(kMagic.size(), "magic");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kFormat, "unsupported version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.dim = r.get<std::uint32_t>("dim");
  cfg.n = r.get<std::uint8_t>("n");
  cfg.shift = r.get<std::uint8_t>("shift");
  const int stored_bits = r.get<std::uint8_t>("entry_bits");
  if (stored_bits != 1 && stored_bits != 8 && stored_bits != 16 && stored_bits != 32) {
    throw Error(ErrorCode::kFormat, "bad entry_bits " + std::to_string(stored_bits));
  }
  cfg.entry_bits = stored_bits == 1 ? 8 : stored_bits;
  const auto adaptive_flag = r.get<std::uint8_t>("adaptive");
  if (adaptive_flag > 1) throw Error(ErrorCode::kFormat, "bad adaptive flag");
  cfg.adaptive = adaptive_flag == 1;
  cfg.adapt_weight = r.get<std::uint32_t>("adapt_weight");
  cfg.seed = r.get<std::uint64_t>("seed");
  const auto label_count = r.get<std::uint16_t>("label_count");
  const auto train_count = r.get<std::uint64_t>("train_ngram_count");
  const auto adapt_count = r.get<std::uint64_t>("adapt_event_count");
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, std::string("invalid header: ") + e.what());
  }
  if (label_count == 0) throw Error(ErrorCode::kFormat, "label_count is zero");

  std::vector<StateLabel> labels;
  labels.reserve(label_count);
  for (std::uint16_t i = 0; i < label_count; ++i) {
    const auto len = r.get<std::uint16_t>("label length");
    labels.emplace_back(r.get_bytes(len, "label"));
  }
  std::vector<Hypervector> vectors;
  vectors.reserve(label_count);
  for (std::uint16_t i = 0; i < label_count; ++i) vectors.push_back(r.get_bits(cfg.dim, "codebook"));

  Accumulator base;
  Accumulator adaptive = Accumulator::zeros(cfg.dim, cfg.entry_bits);
  if (stored_bits == 1) {
    base = Accumulator::from_hypervector(r.get_bits(cfg.dim, "base"), cfg.entry_bits);
    if (cfg.adaptive) adaptive = Accumulator::from_hypervector(r.get_bits(cfg.dim, "adaptive"), cfg.entry_bits);
  } else {
    base = get_accumulator(r, cfg.dim, cfg.entry_bits, "base");
    if (cfg.adaptive) adaptive = get_accumulator(r, cfg.dim, cfg.entry_bits, "adaptive");
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kFormat, "trailing bytes before checksum");

  Codebook cb;
  try {
    cb = Codebook::from_entries(std::move(labels), std::move(vectors), cfg.seed);
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, std::string("invalid labels: ") + e.what());
  }
  return Model::from_parts(cfg, std::move(cb), std::move(base), std::move(adaptive), train_count, adapt_count);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return load_model(in);
}

std::size_t model_file_size(const ModelConfig& cfg, std::span<const StateLabel> labels, const SaveOptions& opts) {
  constexpr std::size_t kHeader = 4 + 2 + 4 + 1 + 1 + 1 + 1 + 4 + 8 + 2 + 8 + 8;
  const auto dim = static_cast<std::size_t>(cfg.dim);
  std::size_t size = kHeader;
  for (const auto& label : labels) size += 2 + label.size();
  size += labels.size() * ((dim + 7) / 8);
  const std::size_t memories = cfg.adaptive ? 2 : 1;
  size += memories * (opts.sign_quantize ? (dim + 7) / 8 : dim * static_cast<std::size_t>(cfg.entry_bits) / 8);
  return size + 4;
}

}  // namespace hyperseq
