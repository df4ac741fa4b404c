#include "bayescg/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bayescg {

namespace {

struct MmHeader {
    bool coordinate = true;
    bool symmetric = false;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

MmHeader parse_header(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || lower(object) != "matrix")
        throw std::runtime_error(path + ": not a MatrixMarket matrix file");
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (format != "coordinate" && format != "array")
        throw std::runtime_error(path + ": unsupported format '" + format + "'");
    if (field != "real" && field != "integer")
        throw std::runtime_error(path + ": unsupported field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric")
        throw std::runtime_error(path + ": unsupported symmetry '" + symmetry + "'");
    return {format == "coordinate", symmetry == "symmetric"};
}

std::istream& next_data_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        auto p = line.find_first_not_of(" \t\r");
        if (p == std::string::npos || line[p] == '%') continue;
        return in;
    }
    return in;
}

void write_value(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

}  // namespace

void write_matrix_market(const SparseMatrix& a, const std::filesystem::path& path, bool symmetric) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j : a.row_cols(i))
            if (!symmetric || j <= i) ++count;
    out << a.dim() << " " << a.dim() << " " << count << "\n";
    for (std::size_t i = 0; i < a.dim(); ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (symmetric && cols[k] > i) continue;
            out << (i + 1) << " " << (cols[k] + 1) << " ";
            write_value(out, vals[k]);
            out << "\n";
        }
    }
}

void write_matrix_market(const DenseMatrix& a, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "%%MatrixMarket matrix array real general\n";
    out << a.rows() << " " << a.cols() << "\n";
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) {
            write_value(out, a(i, j));
            out << "\n";
        }
}

void write_matrix_market(const Vector& v, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "%%MatrixMarket matrix array real general\n";
    out << v.size() << " 1\n";
    for (double x : v) {
        write_value(out, x);
        out << "\n";
    }
}

DenseMatrix read_matrix_market_dense(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    MmHeader h = parse_header(in, path.string());
    std::string line;
    if (!next_data_line(in, line)) throw std::runtime_error(path.string() + ": missing size line");
    std::istringstream ss(line);
    std::size_t rows, cols, nnz = 0;
    if (h.coordinate) {
        if (!(ss >> rows >> cols >> nnz))
            throw std::runtime_error(path.string() + ": bad coordinate size line");
        DenseMatrix a(rows, cols);
        for (std::size_t k = 0; k < nnz; ++k) {
            if (!next_data_line(in, line))
                throw std::runtime_error(path.string() + ": truncated entry list");
            std::istringstream es(line);
            std::size_t i, j;
            double v;
            if (!(es >> i >> j >> v))
                throw std::runtime_error(path.string() + ": malformed entry '" + line + "'");
            if (i < 1 || i > rows || j < 1 || j > cols)
                throw std::runtime_error(path.string() + ": entry index out of range");
            a(i - 1, j - 1) = v;
            if (h.symmetric && i != j) a(j - 1, i - 1) = v;
        }
        return a;
    }
    if (!(ss >> rows >> cols)) throw std::runtime_error(path.string() + ": bad array size line");
    DenseMatrix a(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) {
            if (h.symmetric && i < j) continue;  // array symmetric stores lower triangle only
            if (!next_data_line(in, line))
                throw std::runtime_error(path.string() + ": truncated array data");
            std::istringstream es(line);
            double v;
            if (!(es >> v)) throw std::runtime_error(path.string() + ": malformed value '" + line + "'");
            a(i, j) = v;
            if (h.symmetric) a(j, i) = v;
        }
    return a;
}

SparseMatrix read_matrix_market_sparse(const std::filesystem::path& path) {
    DenseMatrix a = read_matrix_market_dense(path);
    if (a.rows() != a.cols())
        throw std::runtime_error(path.string() + ": expected a square matrix");
    return SparseMatrix::from_dense(a);
}

Vector read_matrix_market_vector(const std::filesystem::path& path) {
    DenseMatrix a = read_matrix_market_dense(path);
    if (a.cols() == 1) return a.col(0);
    if (a.rows() == 1) return a.row(0);
    throw std::runtime_error(path.string() + ": expected a vector (one row or column)");
}

}  // namespace bayescg
