#include "lowrankcv/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace lowrankcv {

namespace {

std::optional<double> parse_number(std::string_view tok) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        return std::nullopt;
    }
    return v;
}

bool is_na(std::string_view tok) { return tok == "NA"; }

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

struct Builder {
    std::vector<double> values;
    std::vector<Cell> observed;
    Index cols = 0;

    void push(std::string_view tok, Index row, Index col) {
        if (is_na(tok)) {
            values.push_back(0.0);
            return;
        }
        const auto v = parse_number(tok);
        if (!v) {
            throw IoError("matrix parse: bad token '" + std::string(tok) + "' at row " +
                          std::to_string(row + 1));
        }
        if (!std::isfinite(*v)) {
            throw InvalidMatrix("matrix parse: non-finite value at row " + std::to_string(row + 1));
        }
        values.push_back(*v);
        observed.push_back({row, col});
    }

    MaskedMatrix finish(Index rows) {
        if (rows == 0 || cols == 0) {
            throw IoError("matrix parse: empty matrix");
        }
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) {
                m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
            }
        }
        return MaskedMatrix(std::move(m), IndexSet(rows, cols, std::move(observed)));
    }
};

}  // namespace

MaskedMatrix parse_matrix_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    long long rows = 0;
    long long cols = 0;
    if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) {
        throw IoError("matrix parse: missing or invalid 'rows cols' header");
    }
    Builder b;
    b.cols = static_cast<Index>(cols);
    std::string tok;
    const long long total = rows * cols;
    for (long long t = 0; t < total; ++t) {
        if (!(in >> tok)) {
            throw IoError("matrix parse: expected " + std::to_string(total) + " values, got " +
                          std::to_string(t));
        }
        b.push(tok, static_cast<Index>(t / cols), static_cast<Index>(t % cols));
    }
    if (in >> tok) {
        throw IoError("matrix parse: trailing data after " + std::to_string(total) + " values");
    }
    return b.finish(static_cast<Index>(rows));
}

MaskedMatrix parse_matrix_csv(std::string_view text) {
    Builder b;
    Index row = 0;
    bool first_line = true;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = trim(text.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string_view> toks;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            toks.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (first_line) {
            first_line = false;
            bool header = false;
            for (const auto t : toks) {
                if (!is_na(t) && !parse_number(t)) {
                    header = true;
                }
            }
            if (header) {
                continue;
            }
        }
        if (b.cols == 0) {
            b.cols = static_cast<Index>(toks.size());
        } else if (static_cast<Index>(toks.size()) != b.cols) {
            throw IoError("csv parse: row " + std::to_string(row + 1) + " has " +
                          std::to_string(toks.size()) + " fields, expected " +
                          std::to_string(b.cols));
        }
        for (std::size_t j = 0; j < toks.size(); ++j) {
            b.push(toks[j], row, static_cast<Index>(j));
        }
        ++row;
    }
    return b.finish(row);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {
bool is_csv_path(const std::string& path) {
    return std::filesystem::path(path).extension() == ".csv";
}
}  // namespace

MaskedMatrix read_matrix(const std::string& path) {
    const std::string text = read_file(path);
    return is_csv_path(path) ? parse_matrix_csv(text) : parse_matrix_text(text);
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string format_matrix_text(const Matrix& a) {
    std::string out = std::to_string(a.rows()) + " " + std::to_string(a.cols()) + "\n";
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (j > 0) {
                out += ' ';
            }
            out += format_double(a(i, j));
        }
        out += '\n';
    }
    return out;
}

std::string format_matrix_csv(const Matrix& a) {
    std::string out;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (j > 0) {
                out += ',';
            }
            out += format_double(a(i, j));
        }
        out += '\n';
    }
    return out;
}

void write_file_atomic(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw IoError("write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename onto '" + path + "'");
    }
}

void write_matrix(const std::string& path, const Matrix& a) {
    write_file_atomic(path, is_csv_path(path) ? format_matrix_csv(a) : format_matrix_text(a));
}

}  // namespace lowrankcv
