#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lumen/errors.hpp"

namespace lumen {

// =====================================================================
//  Run configuration
//
//  Flat key=value lines with '#' comments. Every key is known and every
//  value round-trips losslessly through the text form (doubles are
//  written with 17 significant digits). Unknown keys are rejected.
// =====================================================================

struct RunConfig {
    // schedule
    int T = 512;
    double beta_start = 1e-4;
    double beta_end = 2e-2;

    // model
    std::vector<int> hidden = {128, 128, 128};
    int t_embed_dim = 16;
    int patch = 8;  // desk default; the reference setting is 96

    // teacher training
    long teacher_iterations = 20000;
    double lr = 1e-4;
    int batch = 16;
    double ema_decay = 0.9999;
    double l2 = 0.0;

    // distillation
    long distill_iterations = 5000;
    int K_student = 2;
    double omega = 0.8;

    // loss weights
    double lambda_eps = 1.0;
    double lambda_pix = 1.0;
    double lambda_per = 0.1;

    // synthetic data
    int pairs = 256;

    // master seed; substreams (data, noise, init, ...) derive from it
    std::uint64_t seed = 1;

    // file paths (optional; CLI flags take precedence)
    std::string teacher_checkpoint;
    std::string student_checkpoint;
    std::string loss_csv;

    bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_int_list(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw parse_error("config: bad numeric value for '" + key + "': " + value);
    }
}

inline long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw parse_error("config: bad integer value for '" + key + "': " + value);
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw parse_error("config: bad unsigned value for '" + key + "': " + value);
    }
}

inline std::vector<int> parse_int_list(const std::string& key,
                                       const std::string& value) {
    std::vector<int> out;
    if (value.empty()) return out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(static_cast<int>(parse_long(key, item)));
    }
    return out;
}

}  // namespace config_detail

inline std::string serialize_config(const RunConfig& c) {
    using config_detail::format_double;
    std::ostringstream out;
    out << "# run configuration\n";
    out << "T=" << c.T << "\n";
    out << "beta_start=" << format_double(c.beta_start) << "\n";
    out << "beta_end=" << format_double(c.beta_end) << "\n";
    out << "hidden=" << config_detail::format_int_list(c.hidden) << "\n";
    out << "t_embed_dim=" << c.t_embed_dim << "\n";
    out << "patch=" << c.patch << "\n";
    out << "teacher_iterations=" << c.teacher_iterations << "\n";
    out << "lr=" << format_double(c.lr) << "\n";
    out << "batch=" << c.batch << "\n";
    out << "ema_decay=" << format_double(c.ema_decay) << "\n";
    out << "l2=" << format_double(c.l2) << "\n";
    out << "distill_iterations=" << c.distill_iterations << "\n";
    out << "K_student=" << c.K_student << "\n";
    out << "omega=" << format_double(c.omega) << "\n";
    out << "lambda_eps=" << format_double(c.lambda_eps) << "\n";
    out << "lambda_pix=" << format_double(c.lambda_pix) << "\n";
    out << "lambda_per=" << format_double(c.lambda_per) << "\n";
    out << "pairs=" << c.pairs << "\n";
    out << "seed=" << c.seed << "\n";
    out << "teacher_checkpoint=" << c.teacher_checkpoint << "\n";
    out << "student_checkpoint=" << c.student_checkpoint << "\n";
    out << "loss_csv=" << c.loss_csv << "\n";
    return out.str();
}

inline RunConfig parse_config(const std::string& text) {
    using namespace config_detail;
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        const auto first = trimmed.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        trimmed = trimmed.substr(first);
        if (trimmed[0] == '#') continue;

        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw parse_error("config: missing '=' on line " +
                              std::to_string(lineno));
        }
        const std::string key = trimmed.substr(0, eq);
        const std::string value = trimmed.substr(eq + 1);

        if (key == "T") c.T = static_cast<int>(parse_long(key, value));
        else if (key == "beta_start") c.beta_start = parse_double(key, value);
        else if (key == "beta_end") c.beta_end = parse_double(key, value);
        else if (key == "hidden") c.hidden = parse_int_list(key, value);
        else if (key == "t_embed_dim") c.t_embed_dim = static_cast<int>(parse_long(key, value));
        else if (key == "patch") c.patch = static_cast<int>(parse_long(key, value));
        else if (key == "teacher_iterations") c.teacher_iterations = parse_long(key, value);
        else if (key == "lr") c.lr = parse_double(key, value);
        else if (key == "batch") c.batch = static_cast<int>(parse_long(key, value));
        else if (key == "ema_decay") c.ema_decay = parse_double(key, value);
        else if (key == "l2") c.l2 = parse_double(key, value);
        else if (key == "distill_iterations") c.distill_iterations = parse_long(key, value);
        else if (key == "K_student") c.K_student = static_cast<int>(parse_long(key, value));
        else if (key == "omega") c.omega = parse_double(key, value);
        else if (key == "lambda_eps") c.lambda_eps = parse_double(key, value);
        else if (key == "lambda_pix") c.lambda_pix = parse_double(key, value);
        else if (key == "lambda_per") c.lambda_per = parse_double(key, value);
        else if (key == "pairs") c.pairs = static_cast<int>(parse_long(key, value));
        else if (key == "seed") c.seed = parse_u64(key, value);
        else if (key == "teacher_checkpoint") c.teacher_checkpoint = value;
        else if (key == "student_checkpoint") c.student_checkpoint = value;
        else if (key == "loss_csv") c.loss_csv = value;
        else {
            throw parse_error("config: unknown key '" + key + "' on line " +
                              std::to_string(lineno));
        }
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw parse_error("cannot open config file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline void save_config(const RunConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw parse_error("cannot open config file for writing: " + path.string());
    }
    out << serialize_config(c);
}

}  // namespace lumen
