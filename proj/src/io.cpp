#include "trifun/io.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace trifun::io {
namespace {

// nlohmann handles inbound syntax only; reports go through the ordered
// builder below so key order and float formatting stay pinned.
using nlohmann::json;

double parse_cell(const std::string& cell, int row, int col) {
    const std::size_t first = cell.find_first_not_of(" \t");
    if (first == std::string::npos)
        throw ParseError("csv cell (" + std::to_string(row + 1) + ", " + std::to_string(col + 1) +
                         ") is empty");
    const std::size_t last = cell.find_last_not_of(" \t");
    const std::string trimmed = cell.substr(first, last - first + 1);
    char* end = nullptr;
    const double v = std::strtod(trimmed.c_str(), &end);
    if (end != trimmed.c_str() + trimmed.size())
        throw ParseError("csv cell (" + std::to_string(row + 1) + ", " + std::to_string(col + 1) +
                         ") is not a number: " + trimmed);
    return v;
}

DenseMatrix<double> parse_csv_grid(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string cell =
                comma == std::string::npos ? line.substr(start) : line.substr(start, comma - start);
            row.push_back(parse_cell(cell, static_cast<int>(rows.size()),
                                     static_cast<int>(row.size())));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("csv input has no rows");
    const int d = static_cast<int>(rows.size());
    DenseMatrix<double> a(d, d);
    for (int i = 0; i < d; ++i) {
        if (static_cast<int>(rows[i].size()) != d)
            throw ParseError("csv row " + std::to_string(i + 1) + " has " +
                             std::to_string(rows[i].size()) + " cells, expected " +
                             std::to_string(d));
        for (int j = 0; j < d; ++j) a(i, j) = rows[i][j];
    }
    return a;
}

std::complex<double> parse_entry(const json& e, bool& complex_seen) {
    if (e.is_number()) return {e.get<double>(), 0.0};
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        complex_seen = true;
        return {e[0].get<double>(), e[1].get<double>()};
    }
    throw ParseError("matrix entry must be a number or a [re, im] pair");
}

struct ParsedJsonMatrix {
    DenseMatrix<std::complex<double>> dense;
    bool complex_entries = false;
    std::string orientation;
};

ParsedJsonMatrix parse_json_matrix(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("json: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("input must be a json object");
    if (!doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<long long>() < 1)
        throw ParseError("\"dim\" must be a positive integer");
    const int d = doc["dim"].get<int>();
    if (!doc.contains("orientation") || !doc["orientation"].is_string())
        throw ParseError("\"orientation\" must be \"lower\", \"upper\" or \"dense\"");
    const std::string orientation = doc["orientation"].get<std::string>();
    if (orientation != "lower" && orientation != "upper" && orientation != "dense")
        throw ParseError("\"orientation\" must be \"lower\", \"upper\" or \"dense\"");
    if (!doc.contains("entries") || !doc["entries"].is_array())
        throw ParseError("\"entries\" must be an array of rows");
    const json& entries = doc["entries"];
    if (static_cast<int>(entries.size()) != d)
        throw ParseError("expected " + std::to_string(d) + " rows, got " +
                         std::to_string(entries.size()));

    ParsedJsonMatrix out;
    out.orientation = orientation;
    out.dense = DenseMatrix<std::complex<double>>::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        const json& row = entries[i];
        if (!row.is_array()) throw ParseError("row " + std::to_string(i + 1) + " is not an array");
        int expected = d;
        if (orientation == "lower") expected = i + 1;
        if (orientation == "upper") expected = d - i;
        if (static_cast<int>(row.size()) != expected)
            throw ParseError("row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                             " entries, expected " + std::to_string(expected));
        for (int j = 0; j < expected; ++j) {
            const std::complex<double> v = parse_entry(row[j], out.complex_entries);
            if (orientation == "lower")
                out.dense(i, j) = v;
            else if (orientation == "upper")
                out.dense(i, i + j) = v;  // rows start on the diagonal
            else
                out.dense(i, j) = v;
        }
    }
    return out;
}

/// For a grid with no declared layout: clean upper half means lower, clean
/// lower half means upper, lower wins ties (diagonal matrices). Otherwise
/// the grid is rejected with the smaller of the two obstructions.
template <typename Scalar>
Triangle detect_triangle(const DenseMatrix<Scalar>& a, double zero_tol) {
    const int d = static_cast<int>(a.rows());
    int ai = -1, aj = -1, bi = -1, bj = -1;
    double above = zero_tol, below = zero_tol;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            if (std::abs(a(i, j)) > above) {
                above = std::abs(a(i, j));
                ai = i;
                aj = j;
            }
            if (std::abs(a(j, i)) > below) {
                below = std::abs(a(j, i));
                bi = j;
                bj = i;
            }
        }
    }
    if (ai < 0) return Triangle::Lower;
    if (bi < 0) return Triangle::Upper;
    if (above <= below) throw NotTriangular(ai, aj, above);
    throw NotTriangular(bi, bj, below);
}

template <typename Scalar>
void pack_into(LoadedMatrix& out, const DenseMatrix<Scalar>& dense, Triangle triangle,
               double zero_tol) {
    FromDenseResult<Scalar> packed = from_dense(dense, zero_tol, triangle);
    out.transposed = packed.transposed;
    out.orientation = packed.transposed ? "upper" : "lower";
    out.dim = packed.matrix.dim();
    out.matrix = std::move(packed.matrix);
}

Json entry_json(double v) { return Json(v); }

Json entry_json(std::complex<double> z) { return complex_json(z); }

template <typename Scalar>
Json matrix_file_json_impl(const LowerTriangular<Scalar>& m, bool transposed) {
    Json file = Json::object();
    const int d = m.dim();
    file["dim"] = d;
    file["orientation"] = transposed ? "upper" : "lower";
    Json rows = Json::array();
    for (int i = 0; i < d; ++i) {
        Json row = Json::array();
        if (transposed) {
            for (int j = i; j < d; ++j) row.push_back(entry_json(m(j, i)));
        } else {
            for (int j = 0; j <= i; ++j) row.push_back(entry_json(m(i, j)));
        }
        rows.push_back(std::move(row));
    }
    file["entries"] = std::move(rows);
    return file;
}

void escape_to(std::string& out, const std::string& s) {
    out += '"';
    for (const char raw : s) {
        const unsigned char c = static_cast<unsigned char>(raw);
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += raw;
                }
        }
    }
    out += '"';
}

void indent_to(std::string& out, int depth) { out.append(static_cast<std::size_t>(depth) * 2, ' '); }

}  // namespace

LoadedMatrix load_matrix(const std::string& text, FileFormat format, OrientationHint hint,
                         double zero_tol) {
    LoadedMatrix out{LowerTriangular<double>(1), false, false, 0, "", fnv1a_digest(text)};
    if (format == FileFormat::Csv) {
        const DenseMatrix<double> dense = parse_csv_grid(text);
        Triangle triangle = Triangle::Lower;
        if (hint == OrientationHint::Auto)
            triangle = detect_triangle(dense, zero_tol);
        else if (hint == OrientationHint::Upper)
            triangle = Triangle::Upper;
        pack_into(out, dense, triangle, zero_tol);
        return out;
    }
    if (hint != OrientationHint::Auto)
        throw ParseError("orientation flags apply to csv input; json declares its own layout");
    const ParsedJsonMatrix parsed = parse_json_matrix(text);
    Triangle triangle = Triangle::Lower;
    if (parsed.orientation == "upper")
        triangle = Triangle::Upper;
    else if (parsed.orientation == "dense")
        triangle = detect_triangle(parsed.dense, zero_tol);
    out.complex_entries = parsed.complex_entries;
    if (parsed.complex_entries) {
        pack_into(out, parsed.dense, triangle, zero_tol);
    } else {
        const DenseMatrix<double> real = parsed.dense.real();
        pack_into(out, real, triangle, zero_tol);
    }
    return out;
}

std::string read_file_or_stdin(const std::string& path) {
    std::ostringstream buf;
    if (path == "-") {
        buf << std::cin.rdbuf();
        return buf.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open input file: " + path);
    buf << in.rdbuf();
    return buf.str();
}

FileFormat format_for_path(const std::string& path, const std::string& requested) {
    if (requested == "json") return FileFormat::Json;
    if (requested == "csv") return FileFormat::Csv;
    if (!requested.empty()) throw ParseError("unknown format: " + requested);
    if (path.size() >= 4) {
        std::string tail = path.substr(path.size() - 4);
        for (char& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (tail == ".csv") return FileFormat::Csv;
    }
    return FileFormat::Json;
}

std::string fnv1a_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int float_digits_from_env() {
    const char* s = std::getenv("TRIFUN_FLOAT_DIGITS");
    if (s == nullptr || *s == '\0') return 17;
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end == s) return 17;
    if (v < 1) return 1;
    if (v > 17) return 17;
    return static_cast<int>(v);
}

std::string format_float(double v, int digits) {
    if (!std::isfinite(v)) return "null";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
    return buf;
}

Json& Json::operator[](const std::string& key) {
    if (kind_ != Kind::Object) throw Error("json builder: indexed value is not an object");
    for (auto& member : members_)
        if (member.first == key) return member.second;
    members_.emplace_back(key, Json());
    return members_.back().second;
}

void Json::push_back(Json v) {
    if (kind_ != Kind::Array) throw Error("json builder: appended value is not an array");
    items_.push_back(std::move(v));
}

std::string Json::dump(int float_digits) const {
    std::string out;
    write(out, float_digits, 0);
    return out;
}

void Json::write(std::string& out, int float_digits, int depth) const {
    switch (kind_) {
        case Kind::Null: out += "null"; return;
        case Kind::Bool: out += bool_ ? "true" : "false"; return;
        case Kind::Int: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%lld", int_);
            out += buf;
            return;
        }
        case Kind::Float: out += format_float(float_, float_digits); return;
        case Kind::Str: escape_to(out, str_); return;
        case Kind::Array: {
            if (items_.empty()) {
                out += "[]";
                return;
            }
            bool flat = true;
            for (const Json& item : items_) flat = flat && item.is_scalar();
            if (flat) {
                out += '[';
                for (std::size_t i = 0; i < items_.size(); ++i) {
                    if (i > 0) out += ", ";
                    items_[i].write(out, float_digits, depth);
                }
                out += ']';
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < items_.size(); ++i) {
                indent_to(out, depth + 1);
                items_[i].write(out, float_digits, depth + 1);
                if (i + 1 < items_.size()) out += ',';
                out += '\n';
            }
            indent_to(out, depth);
            out += ']';
            return;
        }
        case Kind::Object: {
            if (members_.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            for (std::size_t i = 0; i < members_.size(); ++i) {
                indent_to(out, depth + 1);
                escape_to(out, members_[i].first);
                out += ": ";
                members_[i].second.write(out, float_digits, depth + 1);
                if (i + 1 < members_.size()) out += ',';
                out += '\n';
            }
            indent_to(out, depth);
            out += '}';
            return;
        }
    }
}

Json matrix_file_json(const LowerTriangular<double>& m, bool transposed) {
    return matrix_file_json_impl(m, transposed);
}

Json matrix_file_json(const LowerTriangular<std::complex<double>>& m, bool transposed) {
    return matrix_file_json_impl(m, transposed);
}

Json complex_json(std::complex<double> z) {
    Json pair = Json::array();
    pair.push_back(Json(z.real()));
    pair.push_back(Json(z.imag()));
    return pair;
}

}  // namespace trifun::io
