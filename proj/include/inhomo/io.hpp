#pragma once

// Model-spec (JSON) parsing with strict field checking, CSV emission
// with round-trippable floats, and the binary matrix dump.

#include "inhomo/channels.hpp"
#include "inhomo/core.hpp"
#include "inhomo/thresholds.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace inhomo {

using json = nlohmann::json;

// Thrown on unreadable/unwritable paths; the CLI maps this to exit 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parsed model document: prior + profile, optional channel, optional
// scan family (direction in which inv_delta grows), free-form labels.
struct ModelSpec {
    Prior prior;
    NoiseProfile profile;
    std::optional<ChannelFamily> channel;
    std::optional<Matrix> family_shape;
    std::map<std::string, std::string> labels;
};

namespace detail {

inline void reject_unknown(const json& j, const char* where,
                           std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok)
            throw SpecError(std::string("spec: unknown field '") + it.key() +
                            "' in " + where);
    }
}

inline Vector parse_vector(const json& j, const char* where) {
    if (!j.is_array()) throw SpecError(std::string(where) + " must be an array");
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw SpecError(std::string(where) + " must hold numbers");
        v(static_cast<int>(i)) = j[i].get<double>();
    }
    return v;
}

inline Matrix parse_matrix(const json& j, const char* where) {
    if (!j.is_array() || j.empty())
        throw SpecError(std::string(where) + " must be a nonempty 2d array");
    size_t cols = j[0].size();
    Matrix m(j.size(), cols);
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw SpecError(std::string(where) + " rows must have equal size");
        for (size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number())
                throw SpecError(std::string(where) + " must hold numbers");
            m(static_cast<int>(i), static_cast<int>(k)) =
                j[i][k].get<double>();
        }
    }
    return m;
}

}  // namespace detail

inline Prior parse_prior(const json& j) {
    detail::reject_unknown(j, "prior",
                           {"kappa", "gaussian", "atoms", "weights"});
    int kappa = j.value("kappa", 1);
    if (j.value("gaussian", false)) {
        if (j.contains("atoms") || j.contains("weights"))
            throw SpecError("spec: gaussian prior takes no atoms/weights");
        return Prior::standard_gaussian(kappa);
    }
    if (!j.contains("atoms") || !j.contains("weights"))
        throw SpecError("spec: finite prior needs atoms and weights");
    std::vector<Vector> atoms;
    for (const auto& a : j["atoms"])
        atoms.push_back(detail::parse_vector(a, "prior.atoms entry"));
    std::vector<double> weights = j["weights"].get<std::vector<double>>();
    return Prior::finite(kappa, std::move(atoms), std::move(weights));
}

inline NoiseProfile parse_profile(const json& j) {
    detail::reject_unknown(j, "profile", {"rho", "inv_delta"});
    if (!j.contains("rho") || !j.contains("inv_delta"))
        throw SpecError("spec: profile needs rho and inv_delta");
    return NoiseProfile(detail::parse_vector(j["rho"], "profile.rho"),
                        detail::parse_matrix(j["inv_delta"],
                                             "profile.inv_delta"));
}

inline ChannelFamily parse_channel(const json& j, const Vector& rho) {
    detail::reject_unknown(j, "channel",
                           {"kind", "theta", "lambda", "delta", "table"});
    std::string kind = j.value("kind", "");
    if (kind == "dcsbm") {
        if (!j.contains("theta") || !j.contains("lambda"))
            throw SpecError("spec: dcsbm channel needs theta and lambda");
        return dcsbm_channel(detail::parse_vector(j["theta"],
                                                  "channel.theta"),
                             j["lambda"].get<double>(), rho);
    }
    if (kind == "gaussian") {
        if (!j.contains("delta"))
            throw SpecError("spec: gaussian channel needs delta");
        Matrix delta = detail::parse_matrix(j["delta"], "channel.delta");
        if (delta.minCoeff() <= 0.0)
            throw SpecError("spec: channel.delta entries must be positive");
        return gaussian_channel(NoiseProfile(rho, delta.cwiseInverse()));
    }
    if (kind == "custom") {
        if (!j.contains("table"))
            throw SpecError("spec: custom channel needs table");
        const json& tj = j["table"];
        std::vector<std::vector<std::vector<ChannelEntry>>> table;
        for (const auto& row : tj) {
            std::vector<std::vector<ChannelEntry>> r;
            for (const auto& cell : row) {
                std::vector<ChannelEntry> entries;
                for (const auto& e : cell) {
                    detail::reject_unknown(
                        e, "channel.table entry",
                        {"value", "prob", "score", "curvature"});
                    entries.push_back({e.at("value").get<double>(),
                                       e.at("prob").get<double>(),
                                       e.at("score").get<double>(),
                                       e.at("curvature").get<double>()});
                }
                r.push_back(std::move(entries));
            }
            table.push_back(std::move(r));
        }
        return custom_channel(std::move(table), rho);
    }
    throw SpecError("spec: channel.kind must be dcsbm, gaussian or custom");
}

inline ModelSpec parse_model_spec(const json& j) {
    detail::reject_unknown(j, "spec root",
                           {"prior", "profile", "channel", "family",
                            "labels"});
    ModelSpec m;
    if (!j.contains("prior") || !j.contains("profile"))
        throw SpecError("spec: prior and profile are required");
    m.prior = parse_prior(j["prior"]);
    m.profile = parse_profile(j["profile"]);
    if (j.contains("channel"))
        m.channel = parse_channel(j["channel"], m.profile.rho);
    if (j.contains("family")) {
        detail::reject_unknown(j["family"], "family", {"shape"});
        if (!j["family"].contains("shape"))
            throw SpecError("spec: family needs shape");
        Matrix shape = detail::parse_matrix(j["family"]["shape"],
                                            "family.shape");
        if (shape.rows() != m.profile.n || shape.cols() != m.profile.n)
            throw SpecError("spec: family.shape must be n x n");
        if (!shape.isApprox(shape.transpose(), kSumTol))
            throw SpecError("spec: family.shape must be symmetric");
        m.family_shape = shape;
    }
    if (j.contains("labels")) {
        if (!j["labels"].is_object())
            throw SpecError("spec: labels must be an object");
        for (auto it = j["labels"].begin(); it != j["labels"].end(); ++it) {
            if (!it.value().is_string())
                throw SpecError("spec: labels values must be strings");
            m.labels[it.key()] = it.value().get<std::string>();
        }
    }
    if (m.channel && m.channel->n != m.profile.n)
        throw SpecError("spec: channel block count != profile block count");
    return m;
}

inline ModelSpec load_model_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open spec file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SpecError(std::string("spec: invalid JSON: ") + e.what());
    }
    return parse_model_spec(j);
}

inline json to_json(const Prior& p) {
    json j;
    j["kappa"] = p.kappa;
    if (p.gaussian) {
        j["gaussian"] = true;
        return j;
    }
    json atoms = json::array();
    for (const auto& a : p.atoms)
        atoms.push_back(std::vector<double>(a.data(), a.data() + a.size()));
    j["atoms"] = atoms;
    j["weights"] = p.weights;
    return j;
}

inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const ModelSpec& m) {
    json j;
    j["prior"] = to_json(m.prior);
    j["profile"]["rho"] =
        std::vector<double>(m.profile.rho.data(),
                            m.profile.rho.data() + m.profile.rho.size());
    j["profile"]["inv_delta"] = to_json(m.profile.inv_delta);
    if (m.channel) {
        json c;
        switch (m.channel->kind) {
            case ChannelKind::dcsbm:
                c["kind"] = "dcsbm";
                c["theta"] = std::vector<double>(
                    m.channel->theta.data(),
                    m.channel->theta.data() + m.channel->theta.size());
                c["lambda"] = m.channel->lambda;
                break;
            case ChannelKind::gaussian:
                c["kind"] = "gaussian";
                c["delta"] = to_json(m.channel->delta);
                break;
            case ChannelKind::custom: {
                c["kind"] = "custom";
                json table = json::array();
                for (const auto& row : m.channel->table) {
                    json r = json::array();
                    for (const auto& cell : row) {
                        json entries = json::array();
                        for (const auto& e : cell)
                            entries.push_back({{"value", e.value},
                                               {"prob", e.prob},
                                               {"score", e.score},
                                               {"curvature", e.curvature}});
                        r.push_back(entries);
                    }
                    table.push_back(r);
                }
                c["table"] = table;
                break;
            }
        }
        j["channel"] = c;
    }
    if (m.family_shape) j["family"]["shape"] = to_json(*m.family_shape);
    if (!m.labels.empty()) j["labels"] = m.labels;
    return j;
}

// 17 significant digits: enough for bit-exact double round trips, so
// repeated runs produce byte-identical CSV.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter {
    std::ofstream out;

    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out(path) {
        if (!out) throw IoError("cannot open output file: " + path);
        for (size_t i = 0; i < header.size(); ++i)
            out << (i ? "," : "") << header[i];
        out << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i)
            out << (i ? "," : "") << cells[i];
        out << "\n";
    }
};

// Binary dump: uint64 N, then the lower triangle (row-major, includes
// the diagonal) as native-endian 64-bit floats.
inline void write_matrix_binary(const std::string& path, const Matrix& m) {
    if (m.rows() != m.cols())
        throw SpecError("write_matrix_binary: matrix not square");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    std::uint64_t n = static_cast<std::uint64_t>(m.rows());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = 0; j <= i; ++j) {
            double v = m(static_cast<int>(i), static_cast<int>(j));
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    if (!out) throw IoError("write failed: " + path);
}

inline Matrix read_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open matrix file: " + path);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in || n == 0) throw IoError("bad matrix file header: " + path);
    Matrix m(static_cast<int>(n), static_cast<int>(n));
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = 0; j <= i; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(static_cast<int>(i), static_cast<int>(j)) = v;
            m(static_cast<int>(j), static_cast<int>(i)) = v;
        }
    if (!in) throw IoError("truncated matrix file: " + path);
    return m;
}

}  // namespace inhomo
