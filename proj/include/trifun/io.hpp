#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "trifun/triangular.hpp"

namespace trifun::io {

/// Input that could not be understood at all: bad syntax, bad shape, bad
/// schema. Distinct from inputs that parse but are mathematically out of
/// scope.
class ParseError : public Error {
public:
    using Error::Error;
};

enum class FileFormat { Json, Csv };

/// How to read a dense grid. Json inputs declare their own layout, so the
/// hint only applies to csv.
enum class OrientationHint { Auto, Lower, Upper };

struct LoadedMatrix {
    std::variant<LowerTriangular<double>, LowerTriangular<std::complex<double>>> matrix;
    /// True when the input was upper triangular; it is stored transposed,
    /// and results transpose back on the way out.
    bool transposed = false;
    bool complex_entries = false;
    int dim = 0;
    std::string orientation;  // effective layout after detection: lower or upper
    std::string digest;       // fnv1a-64 over the raw input bytes
};

LoadedMatrix load_matrix(const std::string& text, FileFormat format, OrientationHint hint,
                         double zero_tol);

/// Reads the whole file, or standard input when path is "-".
std::string read_file_or_stdin(const std::string& path);

/// Picks the format: an explicit request ("json" or "csv") wins, otherwise
/// a .csv suffix selects csv and everything else is json.
FileFormat format_for_path(const std::string& path, const std::string& requested);

std::string fnv1a_digest(const std::string& bytes);

/// TRIFUN_FLOAT_DIGITS, clamped to [1, 17]; 17 when absent or unreadable.
int float_digits_from_env();

/// Scientific notation carrying `digits` significant digits. Non-finite
/// values render as null, which keeps every emitted report valid jsonl
/// fodder.
std::string format_float(double v, int digits);

/// Insertion-ordered json document. Reports must serialize with a stable
/// key order and a pinned float format, which rules out map-backed builders.
class Json {
public:
    Json() : kind_(Kind::Null) {}
    Json(std::nullptr_t) : kind_(Kind::Null) {}
    Json(bool v) : kind_(Kind::Bool), bool_(v) {}
    Json(int v) : kind_(Kind::Int), int_(v) {}
    Json(long long v) : kind_(Kind::Int), int_(v) {}
    Json(double v) : kind_(Kind::Float), float_(v) {}
    Json(const char* v) : kind_(Kind::Str), str_(v) {}
    Json(std::string v) : kind_(Kind::Str), str_(std::move(v)) {}

    static Json object() {
        Json j;
        j.kind_ = Kind::Object;
        return j;
    }
    static Json array() {
        Json j;
        j.kind_ = Kind::Array;
        return j;
    }

    /// Inserts the key at the end on first use, like a stable map.
    Json& operator[](const std::string& key);
    void push_back(Json v);

    bool is_scalar() const { return kind_ != Kind::Array && kind_ != Kind::Object; }

    std::string dump(int float_digits) const;

private:
    enum class Kind { Null, Bool, Int, Float, Str, Array, Object };

    void write(std::string& out, int float_digits, int depth) const;

    Kind kind_;
    bool bool_ = false;
    long long int_ = 0;
    double float_ = 0.0;
    std::string str_;
    std::vector<Json> items_;
    std::vector<std::pair<std::string, Json>> members_;
};

/// Result matrices serialize as self-contained matrix files, so any output
/// can feed straight back in as input. A transposed result is emitted in
/// the original upper layout, diagonal first in each row.
Json matrix_file_json(const LowerTriangular<double>& m, bool transposed);
Json matrix_file_json(const LowerTriangular<std::complex<double>>& m, bool transposed);

Json complex_json(std::complex<double> z);

}  // namespace trifun::io
