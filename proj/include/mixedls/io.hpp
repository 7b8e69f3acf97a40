#pragma once
//
// Project     : mixedls
// Module      : mixedls/io.hpp
// Description : Matrix Market dense array files and report serialization
//               (JSON / CSV)
//

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "experiment.hpp"

namespace mixedls {

namespace detail {

// shortest decimal that round-trips the binary64 value
inline std::string shortest_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

// "%%MatrixMarket matrix array real general", column-major values
inline void write_matrix_market(const dense_matrix<double>& M, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix array real general\n";
    out << M.rows() << " " << M.cols() << "\n";
    for (index_t j = 0; j < M.cols(); ++j)
        for (index_t i = 0; i < M.rows(); ++i) out << detail::shortest_double(M(i, j)) << "\n";
    if (!out) throw io_error("write_matrix_market: write failed for " + path);
}

inline dense_matrix<double> read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("read_matrix_market: cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw parse_error("read_matrix_market: empty file", 1);
    ++lineno;
    {
        std::istringstream hs(line);
        std::string bang, object, format, field, symmetry;
        hs >> bang >> object >> format >> field >> symmetry;
        if (bang != "%%MatrixMarket" || object != "matrix" || format != "array" ||
            field != "real" || symmetry != "general")
            throw parse_error("read_matrix_market: unsupported header '" + line + "'", lineno);
    }
    // skip comments
    do {
        if (!std::getline(in, line)) throw parse_error("read_matrix_market: missing size line", lineno);
        ++lineno;
    } while (!line.empty() && line[0] == '%');
    index_t rows = 0, cols = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> rows >> cols) || rows == 0 || cols == 0)
            throw parse_error("read_matrix_market: bad size line '" + line + "'", lineno);
    }
    dense_matrix<double> M(rows, cols);
    for (index_t k = 0; k < rows * cols; ++k) {
        double v;
        if (!(in >> v)) throw parse_error("read_matrix_market: bad or missing value", lineno + k + 1);
        M.data()[k] = v;
    }
    return M;
}

inline nlohmann::json report_to_json(const experiment_report& r) {
    nlohmann::json j;
    j["kind"] = r.spec.kind == problem_kind::lse ? "lse" : "gls";
    j["m"] = r.spec.m;
    j["n"] = r.spec.n;
    j["p"] = r.spec.p;
    j["cond"] = r.spec.cond;
    j["seed"] = r.spec.seed;
    j["distribution"] = to_string(r.spec.distribution);
    j["method"] = to_string(r.method);
    j["metric1"] = r.metric1;
    j["metric2"] = r.metric2;
    j["iterations"] = r.iterations;
    j["inner_iterations"] = r.inner_iterations;
    j["status"] = to_string(r.status);
    j["timings"] = {{"factorization", r.timing.factorization}, {"init", r.timing.init},
                    {"residual", r.timing.residual},           {"correction", r.timing.correction},
                    {"gmres", r.timing.gmres},                 {"other", r.timing.other}};
    return j;
}

inline nlohmann::json reports_to_json(const std::vector<experiment_report>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    return arr;
}

inline constexpr const char* report_csv_header =
    "kind,m,n,p,cond,seed,distribution,method,metric1,metric2,iterations,"
    "inner_iterations,status,factorization,init,residual,correction,gmres,other";

inline std::string report_to_csv_row(const experiment_report& r) {
    std::ostringstream os;
    os << (r.spec.kind == problem_kind::lse ? "lse" : "gls") << ',' << r.spec.m << ',' << r.spec.n
       << ',' << r.spec.p << ',' << detail::shortest_double(r.spec.cond) << ',' << r.spec.seed
       << ',' << to_string(r.spec.distribution) << ',' << to_string(r.method) << ','
       << detail::shortest_double(r.metric1) << ',' << detail::shortest_double(r.metric2) << ','
       << r.iterations << ',' << r.inner_iterations << ',' << to_string(r.status) << ','
       << detail::shortest_double(r.timing.factorization) << ','
       << detail::shortest_double(r.timing.init) << ','
       << detail::shortest_double(r.timing.residual) << ','
       << detail::shortest_double(r.timing.correction) << ','
       << detail::shortest_double(r.timing.gmres) << ','
       << detail::shortest_double(r.timing.other);
    return os.str();
}

enum class report_format { json, csv };

inline void write_reports(const std::vector<experiment_report>& reports, report_format fmt,
                          std::ostream& out) {
    if (fmt == report_format::json) {
        out << reports_to_json(reports).dump(2) << "\n";
    } else {
        out << report_csv_header << "\n";
        for (const auto& r : reports) out << report_to_csv_row(r) << "\n";
    }
}

inline void write_reports(const std::vector<experiment_report>& reports, report_format fmt,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("write_reports: cannot open " + path);
    write_reports(reports, fmt, out);
    if (!out) throw io_error("write_reports: write failed for " + path);
}

} // namespace mixedls
