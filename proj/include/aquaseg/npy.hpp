// SPDX-License-Identifier: Apache-2.0
//
// Reader/writer for the .npy v1.0 tensor container. Float tensors are
// promoted to double on load; label maps are stored as uint16.
#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aquaseg/array.hpp"
#include "aquaseg/error.hpp"

namespace aquaseg::npy {

enum class DType { F4, F8, U1, U2 };

inline std::size_t item_size(DType t) noexcept
{
    switch (t) {
    case DType::F4: return 4;
    case DType::F8: return 8;
    case DType::U1: return 1;
    case DType::U2: return 2;
    }
    return 0;
}

inline bool is_floating(DType t) noexcept { return t == DType::F4 || t == DType::F8; }

struct Header {
    DType dtype = DType::F4;
    bool big_endian = false;
    std::vector<std::size_t> shape;
    std::size_t data_offset = 0;

    std::size_t element_count() const noexcept
    {
        std::size_t n = 1;
        for (auto d : shape)
            n *= d;
        return n;
    }
};

/// Loaded floating tensor. `dtype` remembers the on-disk element type so the
/// writer can reproduce the file.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<real> values;
    DType dtype = DType::F4;

    std::size_t rank() const noexcept { return shape.size(); }
    bool operator==(const Tensor&) const = default;
};

namespace detail {

inline constexpr char magic[] = "\x93NUMPY";
inline constexpr std::size_t magic_len = 6;
inline constexpr std::size_t preamble_len = 10;
inline constexpr std::size_t array_align = 64;
inline constexpr std::size_t growth_axis_max_digits = 21;

[[noreturn]] inline void malformed(const std::filesystem::path& path, const std::string& why)
{
    throw Error(ErrorCode::MalformedHeader, path.string() + ": " + why);
}

/// Cursor over the python-literal header dictionary.
class DictParser {
public:
    DictParser(std::string_view text, const std::filesystem::path& path) : text_(text), path_(path) {}

    Header parse()
    {
        Header h;
        bool have_descr = false, have_order = false, have_shape = false;
        expect('{');
        skip_ws();
        while (peek() != '}') {
            const std::string key = quoted();
            expect(':');
            if (key == "descr") {
                parse_descr(quoted(), h);
                have_descr = true;
            } else if (key == "fortran_order") {
                skip_ws();
                if (consume_word("False")) {
                } else if (consume_word("True")) {
                    malformed(path_, "fortran_order=True is not supported");
                } else {
                    malformed(path_, "fortran_order must be True or False");
                }
                have_order = true;
            } else if (key == "shape") {
                h.shape = shape_tuple();
                have_shape = true;
            } else {
                malformed(path_, "unexpected header key '" + key + "'");
            }
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
            } else if (peek() != '}') {
                malformed(path_, "expected ',' or '}' in header");
            }
        }
        ++pos_;
        skip_ws();
        if (pos_ != text_.size())
            malformed(path_, "trailing characters after header dict");
        if (!have_descr || !have_order || !have_shape)
            malformed(path_, "header must define descr, fortran_order and shape");
        return h;
    }

private:
    char peek() const
    {
        if (pos_ >= text_.size())
            malformed(path_, "unexpected end of header");
        return text_[pos_];
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    void expect(char c)
    {
        skip_ws();
        if (peek() != c)
            malformed(path_, std::string("expected '") + c + "' in header");
        ++pos_;
    }

    bool consume_word(std::string_view word)
    {
        if (text_.substr(pos_, word.size()) == word) {
            pos_ += word.size();
            return true;
        }
        return false;
    }

    std::string quoted()
    {
        skip_ws();
        const char q = peek();
        if (q != '\'' && q != '"')
            malformed(path_, "expected quoted string in header");
        ++pos_;
        const auto end = text_.find(q, pos_);
        if (end == std::string_view::npos)
            malformed(path_, "unterminated string in header");
        std::string out(text_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return out;
    }

    std::vector<std::size_t> shape_tuple()
    {
        expect('(');
        std::vector<std::size_t> dims;
        skip_ws();
        while (peek() != ')') {
            if (!std::isdigit(static_cast<unsigned char>(peek())))
                malformed(path_, "shape entries must be non-negative integers");
            std::size_t v = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                v = v * 10 + static_cast<std::size_t>(text_[pos_++] - '0');
            dims.push_back(v);
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
            } else if (peek() != ')') {
                malformed(path_, "expected ',' or ')' in shape");
            }
        }
        ++pos_;
        return dims;
    }

    void parse_descr(const std::string& descr, Header& h)
    {
        if (descr.size() != 3)
            malformed(path_, "unsupported descr '" + descr + "'");
        const char order = descr[0];
        const std::string_view kind = std::string_view(descr).substr(1);
        if (kind == "f4")
            h.dtype = DType::F4;
        else if (kind == "f8")
            h.dtype = DType::F8;
        else if (kind == "u2")
            h.dtype = DType::U2;
        else if (kind == "u1")
            h.dtype = DType::U1;
        else
            malformed(path_, "unsupported descr '" + descr + "'");
        if (order == '<' || order == '|')
            h.big_endian = false;
        else if (order == '>')
            h.big_endian = true;
        else
            malformed(path_, "unsupported byte order in descr '" + descr + "'");
        if (order == '|' && h.dtype != DType::U1)
            malformed(path_, "'|' byte order only valid for single-byte types");
    }

    std::string_view text_;
    const std::filesystem::path& path_;
    std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::MissingFile, path.string() + ": cannot open");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <class U>
U load_scalar(const char* src, bool big_endian) noexcept
{
    U v;
    std::memcpy(&v, src, sizeof(U));
    if (big_endian != (std::endian::native == std::endian::big)) {
        auto* b = reinterpret_cast<unsigned char*>(&v);
        for (std::size_t i = 0; i < sizeof(U) / 2; ++i)
            std::swap(b[i], b[sizeof(U) - 1 - i]);
    }
    return v;
}

inline std::string descr_string(DType t)
{
    switch (t) {
    case DType::F4: return "<f4";
    case DType::F8: return "<f8";
    case DType::U1: return "|u1";
    case DType::U2: return "<u2";
    }
    return {};
}

template <class U>
void append_le(std::string& out, U v)
{
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(b, b + sizeof(U));
    out.append(reinterpret_cast<const char*>(b), sizeof(U));
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, path.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorCode::IoError, path.string() + ": write failed");
}

} // namespace detail

namespace detail {

/// `prefix` holds at least the preamble and header; `file_size` is the size of
/// the whole file and is checked against the declared shape.
inline Header parse_prefix(std::span<const char> prefix, std::size_t file_size, const std::filesystem::path& path)
{
    if (prefix.size() < preamble_len || std::memcmp(prefix.data(), magic, magic_len) != 0)
        malformed(path, "missing NUMPY magic");
    const auto major = static_cast<unsigned char>(prefix[6]);
    const auto minor = static_cast<unsigned char>(prefix[7]);
    if (major != 1 || minor != 0)
        malformed(path, "only format version 1.0 is supported");
    const auto header_len = load_scalar<std::uint16_t>(prefix.data() + 8, false);
    if (prefix.size() < preamble_len + header_len)
        malformed(path, "header length exceeds file size");
    Header h = DictParser(std::string_view(prefix.data() + preamble_len, header_len), path).parse();
    h.data_offset = preamble_len + header_len;
    if (file_size != h.data_offset + h.element_count() * item_size(h.dtype))
        malformed(path, "payload size does not match shape");
    return h;
}

} // namespace detail

/// Parses the preamble and header dictionary of an in-memory .npy file.
inline Header parse_header(std::span<const char> bytes, const std::filesystem::path& path)
{
    return detail::parse_prefix(bytes, bytes.size(), path);
}

/// Reads only the header of a file on disk.
inline Header read_header(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        throw Error(ErrorCode::MissingFile, path.string() + ": cannot open");
    const auto file_size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<char> prefix(std::min<std::size_t>(file_size, detail::preamble_len + 0xFFFF));
    in.read(prefix.data(), static_cast<std::streamsize>(prefix.size()));
    return detail::parse_prefix(prefix, file_size, path);
}

/// Loads a floating tensor of exactly `expected_rank` dimensions, promoting
/// to double and rejecting NaN/Inf.
inline Tensor load_tensor(const std::filesystem::path& path, std::size_t expected_rank)
{
    const auto bytes = detail::read_file(path);
    const Header h = parse_header(bytes, path);
    if (!is_floating(h.dtype))
        detail::malformed(path, "expected a floating-point tensor");
    if (h.shape.size() != expected_rank)
        throw Error(ErrorCode::RankMismatch, path.string() + ": rank " + std::to_string(h.shape.size()) +
                                                 ", expected " + std::to_string(expected_rank));
    Tensor t;
    t.shape = h.shape;
    t.dtype = h.dtype;
    const std::size_t n = h.element_count();
    t.values.resize(n);
    const char* src = bytes.data() + h.data_offset;
    for (std::size_t i = 0; i < n; ++i) {
        const real v = h.dtype == DType::F4 ? static_cast<real>(detail::load_scalar<float>(src + 4 * i, h.big_endian))
                                            : detail::load_scalar<double>(src + 8 * i, h.big_endian);
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteValue,
                        path.string() + ": non-finite value at flat index " + std::to_string(i));
        t.values[i] = v;
    }
    return t;
}

inline FeatureGrid<> load_feature_grid(const std::filesystem::path& path)
{
    auto t = load_tensor(path, 3);
    return {t.shape[0], t.shape[1], t.shape[2], std::move(t.values)};
}

inline Matrix<> load_matrix(const std::filesystem::path& path)
{
    auto t = load_tensor(path, 2);
    return {t.shape[0], t.shape[1], std::move(t.values)};
}

inline TemplateStack<> load_template_stack(const std::filesystem::path& path)
{
    auto t = load_tensor(path, 3);
    return {t.shape[0], t.shape[1], t.shape[2], std::move(t.values)};
}

/// Loads a rank-2 unsigned label map. Labels are not range-checked here; see
/// CategoryRegistry::validate_labels.
inline LabelMap load_label_map(const std::filesystem::path& path)
{
    const auto bytes = detail::read_file(path);
    const Header h = parse_header(bytes, path);
    if (h.dtype != DType::U2 && h.dtype != DType::U1)
        detail::malformed(path, "label maps must be uint16 or uint8");
    if (h.shape.size() != 2)
        throw Error(ErrorCode::RankMismatch,
                    path.string() + ": rank " + std::to_string(h.shape.size()) + ", expected 2");
    LabelMap m(h.shape[0], h.shape[1]);
    const char* src = bytes.data() + h.data_offset;
    for (std::size_t i = 0; i < m.size(); ++i)
        m.labels[i] = h.dtype == DType::U2 ? detail::load_scalar<std::uint16_t>(src + 2 * i, h.big_endian)
                                           : static_cast<std::uint8_t>(src[i]);
    return m;
}

/// Canonical v1.0 preamble + header, byte-identical to numpy's writer.
inline std::string encode_header(DType dtype, std::span<const std::size_t> shape)
{
    std::string dict = "{'descr': '" + detail::descr_string(dtype) + "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            dict += ", ";
        dict += std::to_string(shape[i]);
    }
    if (shape.size() == 1)
        dict += ",";
    dict += "), }";
    if (!shape.empty())
        dict.append(detail::growth_axis_max_digits - std::to_string(shape[0]).size(), ' ');
    const std::size_t hlen = dict.size() + 1;
    const std::size_t padlen = detail::array_align - ((detail::preamble_len + hlen) % detail::array_align);
    dict.append(padlen, ' ');
    dict.push_back('\n');
    if (dict.size() > 0xFFFF)
        throw Error(ErrorCode::IoError, "npy header too large for format 1.0");

    std::string out(detail::magic, detail::magic_len);
    out.push_back('\x01');
    out.push_back('\x00');
    detail::append_le(out, static_cast<std::uint16_t>(dict.size()));
    out += dict;
    return out;
}

inline std::string encode(const Tensor& t)
{
    std::string out = encode_header(t.dtype, t.shape);
    for (real v : t.values) {
        if (t.dtype == DType::F4)
            detail::append_le(out, static_cast<float>(v));
        else
            detail::append_le(out, v);
    }
    return out;
}

inline void write_tensor(const std::filesystem::path& path, const Tensor& t) { detail::write_file(path, encode(t)); }

inline void write_label_map(const std::filesystem::path& path, const LabelMap& m)
{
    const std::size_t shape[] = {m.height, m.width};
    std::string out = encode_header(DType::U2, shape);
    for (auto v : m.labels)
        detail::append_le(out, v);
    detail::write_file(path, out);
}

} // namespace aquaseg::npy
