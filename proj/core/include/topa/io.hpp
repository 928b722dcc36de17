#pragma once

// Bit-exact little-endian binary formats:
//
//   TTS file ("TTS1"):  magic, version u32, field u8 (0 real / 1 complex),
//     order u8, dims u32[order], T u64, payload (T * prod(dims) scalars, each
//     one f64 or re/im f64 pair, tensors in time order, entries last-index-
//     fastest), CRC32 u32 of everything before it.
//
//   Checkpoint ("TPA1"): magic, version u32, field u8, order u8, dims u32[],
//     ranks u32[], p u32, d u32, varphi/lambda/eps f64, max_iter u32,
//     iters_online u32, core mode u8, aaw flag u8 [tau u32, alpha_damp f64,
//     beta f64], T u64, frozen u64, core count u64, alpha scalars, U_m
//     matrices (row-major), cores, CRC32.
//
// Readers reject unknown magic/version, truncation, checksum mismatches, and
// dimension overflow.

#include "topa/predictor.hpp"
#include "topa/tensor.hpp"
#include "topa/weights.hpp"

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace topa {

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Field : std::uint8_t { Real = 0, Complex = 1 };

template <class Scalar>
constexpr Field field_of() {
    return is_complex_v<Scalar> ? Field::Complex : Field::Real;
}

/// An ordered sequence of same-shape tensors with sampling index; the unit of
/// file I/O. Timestamps are optional in-memory metadata and are not serialized.
template <class Scalar>
struct TTSRecord {
    std::vector<Index> dims;
    std::vector<Tensor<Scalar>> tensors;
    std::vector<double> timestamps;  // optional; empty or one per tensor

    Index t_len() const { return static_cast<Index>(tensors.size()); }

    void validate() const {
        for (const auto& t : tensors)
            if (t.dims() != dims) throw std::invalid_argument("TTSRecord: payload shape mismatch");
        if (!timestamps.empty() && timestamps.size() != tensors.size())
            throw std::invalid_argument("TTSRecord: timestamps must be empty or per-tensor");
    }
};

namespace detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { push(&v, 1); }
    void u32(std::uint32_t v) { push(&v, 4); }
    void u64(std::uint64_t v) { push(&v, 8); }
    void f64(double v) { push(&v, 8); }
    template <class Scalar>
    void scalar(const Scalar& v) {
        if constexpr (is_complex_v<Scalar>) {
            f64(v.real());
            f64(v.imag());
        } else {
            f64(v);
        }
    }
    void chars(const char* s, std::size_t n) { push(s, n); }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }

    void append_crc() {
        const auto c = static_cast<std::uint32_t>(::crc32(0L, buf_.data(), static_cast<uInt>(buf_.size())));
        u32(c);
    }

    void write_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + path);
        out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw IoError("write failed: " + path);
    }

private:
    void push(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> bytes) : buf_(std::move(bytes)) {}

    static ByteReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        if (!in) throw IoError("cannot open: " + path);
        const auto size = in.tellg();
        in.seekg(0);
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
        in.read(reinterpret_cast<char*>(bytes.data()), size);
        if (!in) throw IoError("read failed: " + path);
        return ByteReader(std::move(bytes));
    }

    /// Validates and strips the trailing CRC32.
    void check_crc() {
        if (buf_.size() < 4) throw IoError("truncated file: missing checksum");
        std::uint32_t stored;
        std::memcpy(&stored, buf_.data() + buf_.size() - 4, 4);
        buf_.resize(buf_.size() - 4);
        const auto computed = static_cast<std::uint32_t>(::crc32(0L, buf_.data(), static_cast<uInt>(buf_.size())));
        if (stored != computed) throw IoError("checksum mismatch");
    }

    std::uint8_t u8() { return take<std::uint8_t>(); }
    std::uint32_t u32() { return take<std::uint32_t>(); }
    std::uint64_t u64() { return take<std::uint64_t>(); }
    double f64() { return take<double>(); }
    template <class Scalar>
    Scalar scalar() {
        if constexpr (is_complex_v<Scalar>) {
            const double re = f64();
            const double im = f64();
            return Complex(re, im);
        } else {
            return f64();
        }
    }
    void expect_magic(const char* magic) {
        char got[4];
        raw(got, 4);
        if (std::memcmp(got, magic, 4) != 0) throw IoError(std::string("bad magic; expected ") + magic);
    }
    void expect_done() const {
        if (pos_ != buf_.size()) throw IoError("trailing bytes after payload");
    }

private:
    template <class T>
    T take() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }
    void raw(void* dst, std::size_t n) {
        if (pos_ + n > buf_.size()) throw IoError("truncated file");
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (b != 0 && a > UINT64_MAX / b) throw IoError("dimension overflow");
    return a * b;
}

inline std::vector<Index> read_dims(ByteReader& r, unsigned order) {
    if (order == 0) throw IoError("zero tensor order");
    std::vector<Index> dims;
    std::uint64_t volume = 1;
    for (unsigned m = 0; m < order; ++m) {
        const std::uint32_t d = r.u32();
        if (d == 0) throw IoError("zero dimension");
        volume = checked_mul(volume, d);
        dims.push_back(static_cast<Index>(d));
    }
    checked_mul(volume, 16);  // scalar bytes must be addressable
    return dims;
}

}  // namespace detail

inline constexpr std::uint32_t kTtsVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class Scalar>
void write_tts(const std::string& path, const TTSRecord<Scalar>& rec) {
    rec.validate();
    detail::ByteWriter w;
    w.chars("TTS1", 4);
    w.u32(kTtsVersion);
    w.u8(static_cast<std::uint8_t>(field_of<Scalar>()));
    if (rec.dims.size() > 255) throw IoError("tensor order exceeds format limit");
    w.u8(static_cast<std::uint8_t>(rec.dims.size()));
    for (Index d : rec.dims) w.u32(static_cast<std::uint32_t>(d));
    w.u64(static_cast<std::uint64_t>(rec.tensors.size()));
    for (const auto& t : rec.tensors)
        for (Index f = 0; f < t.size(); ++f) w.scalar<Scalar>(t[f]);
    w.append_crc();
    w.write_file(path);
}

template <class Scalar>
TTSRecord<Scalar> read_tts_as(detail::ByteReader& r, std::vector<Index> dims, std::uint64_t t_len) {
    TTSRecord<Scalar> rec;
    rec.dims = std::move(dims);
    rec.tensors.reserve(t_len);
    for (std::uint64_t t = 0; t < t_len; ++t) {
        Tensor<Scalar> x(rec.dims);
        for (Index f = 0; f < x.size(); ++f) x[f] = r.scalar<Scalar>();
        rec.tensors.push_back(std::move(x));
    }
    r.expect_done();
    return rec;
}

struct AnyTTS {
    Field field;
    std::optional<TTSRecord<double>> real;
    std::optional<TTSRecord<Complex>> cplx;
};

inline AnyTTS read_tts(const std::string& path) {
    auto r = detail::ByteReader::from_file(path);
    r.check_crc();
    r.expect_magic("TTS1");
    if (r.u32() != kTtsVersion) throw IoError("unsupported TTS version");
    const auto field = static_cast<Field>(r.u8());
    const unsigned order = r.u8();
    auto dims = detail::read_dims(r, order);
    const std::uint64_t t_len = r.u64();

    AnyTTS out;
    out.field = field;
    if (field == Field::Real)
        out.real = read_tts_as<double>(r, std::move(dims), t_len);
    else if (field == Field::Complex)
        out.cplx = read_tts_as<Complex>(r, std::move(dims), t_len);
    else
        throw IoError("unknown field tag");
    return out;
}

template <class Scalar>
struct Checkpoint {
    Hyperparams hyper;
    std::optional<AAWConfig> aaw;
    PredictorState<Scalar> state;  // history is not serialized: prediction-only on load
};

template <class Scalar>
void write_checkpoint(const std::string& path, const Hyperparams& hp, const PredictorState<Scalar>& st,
                      const std::optional<AAWConfig>& aaw = std::nullopt) {
    detail::ByteWriter w;
    w.chars("TPA1", 4);
    w.u32(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(field_of<Scalar>()));
    const auto order = static_cast<std::uint8_t>(st.order());
    w.u8(order);
    for (const auto& u : st.subspaces) w.u32(static_cast<std::uint32_t>(u.rows()));
    for (const auto& u : st.subspaces) w.u32(static_cast<std::uint32_t>(u.cols()));
    w.u32(static_cast<std::uint32_t>(hp.spec.p));
    w.u32(static_cast<std::uint32_t>(hp.spec.d));
    w.f64(hp.varphi);
    w.f64(hp.lambda);
    w.f64(hp.eps);
    w.u32(static_cast<std::uint32_t>(hp.max_iter_stage1));
    w.u32(static_cast<std::uint32_t>(hp.iters_online));
    w.u8(hp.core_update_mode == CoreUpdateMode::ExactBlock ? 1 : 0);
    w.u8(aaw ? 1 : 0);
    if (aaw) {
        w.u32(static_cast<std::uint32_t>(aaw->tau));
        w.f64(aaw->alpha_damp);
        w.f64(aaw->beta);
    }
    w.u64(static_cast<std::uint64_t>(st.time_index));
    w.u64(static_cast<std::uint64_t>(st.frozen));
    w.u64(static_cast<std::uint64_t>(st.cores.size()));
    for (Index i = 0; i < st.params.alpha.size(); ++i) w.scalar<Scalar>(st.params.alpha[i]);
    for (const auto& u : st.subspaces)
        for (Index r = 0; r < u.rows(); ++r)
            for (Index c = 0; c < u.cols(); ++c) w.scalar<Scalar>(u(r, c));
    for (const auto& g : st.cores)
        for (Index f = 0; f < g.size(); ++f) w.scalar<Scalar>(g[f]);
    w.append_crc();
    w.write_file(path);
}

template <class Scalar>
Checkpoint<Scalar> read_checkpoint_as(detail::ByteReader& r, unsigned order) {
    Checkpoint<Scalar> cp;
    auto dims = detail::read_dims(r, order);
    auto ranks = detail::read_dims(r, order);
    for (unsigned m = 0; m < order; ++m)
        if (ranks[m] > dims[m]) throw IoError("checkpoint ranks exceed dims");
    cp.hyper.ranks = ranks;
    cp.hyper.spec.p = static_cast<int>(r.u32());
    cp.hyper.spec.d = static_cast<int>(r.u32());
    cp.hyper.varphi = r.f64();
    cp.hyper.lambda = r.f64();
    cp.hyper.eps = r.f64();
    cp.hyper.max_iter_stage1 = static_cast<int>(r.u32());
    cp.hyper.iters_online = static_cast<int>(r.u32());
    cp.hyper.core_update_mode = r.u8() ? CoreUpdateMode::ExactBlock : CoreUpdateMode::PaperForm;
    if (r.u8()) {
        AAWConfig cfg;
        cfg.tau = static_cast<Index>(r.u32());
        cfg.alpha_damp = r.f64();
        cfg.beta = r.f64();
        cp.aaw = cfg;
    }
    cp.state.time_index = static_cast<Index>(r.u64());
    cp.state.frozen = static_cast<Index>(r.u64());
    const std::uint64_t n_cores = r.u64();
    if (cp.state.frozen > static_cast<Index>(n_cores)) throw IoError("checkpoint frozen count exceeds cores");
    cp.state.params.alpha.resize(cp.hyper.spec.p);
    for (int i = 0; i < cp.hyper.spec.p; ++i) cp.state.params.alpha[i] = r.scalar<Scalar>();
    for (unsigned m = 0; m < order; ++m) {
        Matrix<Scalar> u(dims[m], ranks[m]);
        for (Index rr = 0; rr < u.rows(); ++rr)
            for (Index cc = 0; cc < u.cols(); ++cc) u(rr, cc) = r.scalar<Scalar>();
        cp.state.subspaces.push_back(std::move(u));
    }
    std::vector<Index> rdims(ranks.begin(), ranks.end());
    for (std::uint64_t i = 0; i < n_cores; ++i) {
        Tensor<Scalar> g(rdims);
        for (Index f = 0; f < g.size(); ++f) g[f] = r.scalar<Scalar>();
        cp.state.cores.push_back(std::move(g));
    }
    r.expect_done();
    // history is not part of the format; loaded states can predict, and the
    // ingest entry points reject them until observations are reattached.
    return cp;
}

struct AnyCheckpoint {
    Field field;
    std::optional<Checkpoint<double>> real;
    std::optional<Checkpoint<Complex>> cplx;
};

inline AnyCheckpoint read_checkpoint(const std::string& path) {
    auto r = detail::ByteReader::from_file(path);
    r.check_crc();
    r.expect_magic("TPA1");
    if (r.u32() != kCheckpointVersion) throw IoError("unsupported checkpoint version");
    const auto field = static_cast<Field>(r.u8());
    const unsigned order = r.u8();
    AnyCheckpoint out;
    out.field = field;
    if (field == Field::Real)
        out.real = read_checkpoint_as<double>(r, order);
    else if (field == Field::Complex)
        out.cplx = read_checkpoint_as<Complex>(r, order);
    else
        throw IoError("unknown field tag");
    return out;
}

}  // namespace topa
