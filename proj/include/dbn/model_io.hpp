#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include "dbn/data.hpp"
#include "dbn/errors.hpp"
#include "dbn/stack.hpp"

namespace dbn {

// Self-describing trained model: the RBM stack, the softmax head, the fitted
// normalizer, and the class names.
struct Model {
    DbnStack stack;
    std::optional<Normalizer> normalizer;
    std::vector<std::string> class_names = default_class_names();
};

namespace detail {

// Little-endian binary layout: magic "DBN1", u32 version, u32 dims, f64
// values row-major. Doubles round-trip bit-exactly.
constexpr char kMagic[4] = {'D', 'B', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

inline void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw io_error("model file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

inline void write_f64(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

inline double read_f64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw io_error("model file truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
    write_u32(out, static_cast<std::uint32_t>(m.rows()));
    write_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            write_f64(out, m(r, c));
}

inline Matrix read_matrix(std::istream& in) {
    std::uint32_t rows = read_u32(in);
    std::uint32_t cols = read_u32(in);
    Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c)
            m(r, c) = read_f64(in);
    return m;
}

inline void write_vector(std::ostream& out, const Vector& v) {
    write_u32(out, static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(out, v(i));
}

inline Vector read_vector(std::istream& in) {
    std::uint32_t n = read_u32(in);
    Vector v(n);
    for (std::uint32_t i = 0; i < n; ++i) v(i) = read_f64(in);
    return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw io_error("model file truncated");
    return s;
}

} // namespace detail

inline void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open model file for writing: " + path);
    out.write(detail::kMagic, 4);
    detail::write_u32(out, detail::kVersion);

    auto sizes = model.stack.layer_sizes();
    detail::write_u32(out, static_cast<std::uint32_t>(sizes.size()));
    for (int s : sizes) detail::write_u32(out, static_cast<std::uint32_t>(s));

    for (const auto& layer : model.stack.layers) {
        detail::write_matrix(out, layer.w);
        detail::write_vector(out, layer.a);
        detail::write_vector(out, layer.b);
    }

    detail::write_u32(out, model.normalizer ? 1 : 0);
    if (model.normalizer) {
        detail::write_vector(out, model.normalizer->min);
        detail::write_vector(out, model.normalizer->max);
    }

    detail::write_u32(out, model.stack.head ? 1 : 0);
    if (model.stack.head) {
        detail::write_matrix(out, model.stack.head->w_out);
        detail::write_vector(out, model.stack.head->b_out);
    }

    detail::write_u32(out, static_cast<std::uint32_t>(model.class_names.size()));
    for (const auto& name : model.class_names) detail::write_string(out, name);

    if (!out) throw io_error("write failure: " + path);
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open model file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, detail::kMagic, 4) != 0)
        throw parse_error("not a DBN1 model file: " + path);
    std::uint32_t version = detail::read_u32(in);
    if (version != detail::kVersion)
        throw parse_error("unsupported model version " + std::to_string(version));

    std::uint32_t n_sizes = detail::read_u32(in);
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) s = static_cast<int>(detail::read_u32(in));

    Model model;
    for (std::uint32_t k = 0; k + 1 < n_sizes; ++k) {
        RbmParams layer;
        layer.w = detail::read_matrix(in);
        layer.a = detail::read_vector(in);
        layer.b = detail::read_vector(in);
        model.stack.layers.push_back(std::move(layer));
    }
    model.stack.check_chain();

    if (detail::read_u32(in)) {
        Normalizer norm;
        norm.min = detail::read_vector(in);
        norm.max = detail::read_vector(in);
        model.normalizer = std::move(norm);
    }
    if (detail::read_u32(in)) {
        SoftmaxHead head{detail::read_matrix(in), detail::read_vector(in)};
        model.stack.head = std::move(head);
    }
    std::uint32_t n_names = detail::read_u32(in);
    model.class_names.clear();
    for (std::uint32_t i = 0; i < n_names; ++i)
        model.class_names.push_back(detail::read_string(in));
    return model;
}

// Human-readable dump; not round-trip exact.
inline void export_model_text(const Model& model, std::ostream& out) {
    out << std::setprecision(17);
    out << "dbn model, " << model.stack.layers.size() << " layers\n";
    auto sizes = model.stack.layer_sizes();
    out << "layer_sizes:";
    for (int s : sizes) out << " " << s;
    out << "\n";
    for (std::size_t k = 0; k < model.stack.layers.size(); ++k) {
        const auto& l = model.stack.layers[k];
        out << "layer " << k << " w (" << l.num_visible() << "x" << l.num_hidden() << ")\n" << l.w << "\n";
        out << "layer " << k << " a\n" << l.a.transpose() << "\n";
        out << "layer " << k << " b\n" << l.b.transpose() << "\n";
    }
    if (model.normalizer) {
        out << "normalizer min\n" << model.normalizer->min.transpose() << "\n";
        out << "normalizer max\n" << model.normalizer->max.transpose() << "\n";
    }
    if (model.stack.head) {
        out << "head w_out\n" << model.stack.head->w_out << "\n";
        out << "head b_out\n" << model.stack.head->b_out.transpose() << "\n";
    }
    out << "classes:";
    for (const auto& n : model.class_names) out << " " << n;
    out << "\n";
}

} // namespace dbn
