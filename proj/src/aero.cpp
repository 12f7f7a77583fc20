#include "morphcomp/aero.hpp"

#include "morphcomp/errors.hpp"
#include "morphcomp/log.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

namespace morphcomp {

namespace {

constexpr double kCoefficientFloorFraction = 1e-3;

// Grouping key with exact-value semantics; bench protocols repeat the
// same commanded phi/omega values bit-for-bit.
struct GroupKey {
    std::string id;
    double phi;
    double omega;
    bool operator<(const GroupKey& o) const {
        return std::tie(id, phi, omega) < std::tie(o.id, o.phi, o.omega);
    }
};

}  // namespace

double AeroModel::coefficient(double phi) const {
    if (phi == 0.0) return k_t;
    const double k = intercept + slope * phi;
    return std::max(k, kCoefficientFloorFraction * k_t);
}

void AeroModel::validate() const {
    if (!(k_t > 0.0)) throw IdentificationError("k_t must be positive");
    if (!(slope < 0.0)) {
        throw IdentificationError("fitted slope is non-negative: thrust must decrease "
                                  "with occlusion");
    }
    if (std::abs(intercept - k_t) > 0.05 * k_t) {
        throw IdentificationError("fitted k(0) deviates more than 5% from nominal k_t");
    }
    const double k_hi = intercept + slope * phi_valid.second;
    if (!(k_hi > 0.0)) {
        throw IdentificationError("k(phi) non-positive inside the validity range");
    }
}

AeroModel AeroModel::paper_shaped(double k_t, std::string propeller_id) {
    AeroModel m;
    m.k_t = k_t;
    m.intercept = k_t;
    m.slope = -0.75 * k_t / deg_to_rad(270.0);
    m.phi_valid = {0.0, deg_to_rad(270.0)};
    m.propeller_id = std::move(propeller_id);
    return m;
}

ThrustResult thrust(const AeroModel& model, double phi, double omega) {
    if (omega < 0.0) throw std::domain_error("rotor speed must be non-negative");
    if (phi < 0.0) throw std::domain_error("occlusion angle must be non-negative");
    ThrustResult r;
    r.extrapolated = phi != 0.0 &&
                     (phi < model.phi_valid.first || phi > model.phi_valid.second);
    r.thrust = model.coefficient(phi) * omega * omega;
    return r;
}

std::vector<BenchSample> ingest_bench_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open bench CSV: " + path);

    std::string line;
    if (!std::getline(in, line)) {
        log(LogLevel::Warn, "bench CSV is empty: " + path);
        return {};
    }
    // Tolerate a UTF-8 BOM and trailing CR.
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "phi_deg,rpm,thrust_n,rep,propeller_id") {
        throw ConfigError("bench CSV header mismatch, expected "
                          "phi_deg,rpm,thrust_n,rep,propeller_id");
    }

    std::vector<BenchSample> samples;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5) {
            throw ConfigError("bench CSV line " + std::to_string(line_no) +
                              ": expected 5 fields, got " + std::to_string(fields.size()));
        }
        BenchSample s;
        try {
            s.phi = deg_to_rad(std::stod(fields[0]));
            s.omega = rpm_to_rad_s(std::stod(fields[1]));
            s.thrust = std::stod(fields[2]);
            s.repetition = std::stoi(fields[3]);
        } catch (const std::exception&) {
            throw ConfigError("bench CSV line " + std::to_string(line_no) +
                              ": malformed numeric field");
        }
        s.propeller_id = fields[4];
        if (s.omega < 0.0 || s.thrust < 0.0) {
            throw ConfigError("bench CSV line " + std::to_string(line_no) +
                              ": negative rpm or thrust");
        }
        if (s.repetition < 1 || s.repetition > 3) {
            throw ConfigError("bench CSV line " + std::to_string(line_no) +
                              ": repetition must be 1..3");
        }
        samples.push_back(std::move(s));
    }
    if (samples.empty()) log(LogLevel::Warn, "bench CSV has no data rows: " + path);
    return samples;
}

std::vector<BenchSample> average_repetitions(const std::vector<BenchSample>& samples) {
    std::map<GroupKey, std::vector<const BenchSample*>> groups;
    for (const auto& s : samples) {
        groups[{s.propeller_id, s.phi, s.omega}].push_back(&s);
    }
    std::vector<BenchSample> out;
    out.reserve(groups.size());
    for (const auto& [key, members] : groups) {
        if (members.size() < 3) {
            log(LogLevel::Warn, "group (" + key.id + ", phi=" + std::to_string(key.phi) +
                                    ", omega=" + std::to_string(key.omega) + ") has only " +
                                    std::to_string(members.size()) + " repetition(s)");
        }
        double sum = 0.0;
        for (const auto* m : members) sum += m->thrust;
        BenchSample avg = *members.front();
        avg.thrust = sum / static_cast<double>(members.size());
        avg.repetition = 1;
        out.push_back(std::move(avg));
    }
    return out;
}

double fit_nominal(const std::vector<BenchSample>& samples) {
    std::vector<const BenchSample*> nominal;
    for (const auto& s : samples) {
        if (s.phi == 0.0) nominal.push_back(&s);
    }
    std::vector<double> omegas;
    for (const auto* s : nominal) {
        if (std::find(omegas.begin(), omegas.end(), s->omega) == omegas.end()) {
            omegas.push_back(s->omega);
        }
    }
    if (omegas.size() < 5) {
        throw IdentificationError("fit_nominal needs >= 5 distinct speeds at phi = 0, got " +
                                  std::to_string(omegas.size()));
    }
    double num = 0.0, den = 0.0;
    for (const auto* s : nominal) {
        const double w2 = s->omega * s->omega;
        num += s->thrust * w2;
        den += w2 * w2;
    }
    if (den <= 0.0) throw IdentificationError("fit_nominal: degenerate sweep (all zero speed)");
    return num / den;
}

AeroModel fit_angle_coefficient(const std::vector<BenchSample>& samples, double k_t,
                                FitReport* report) {
    // Per-phi through-origin coefficient estimates over the full sweep.
    std::map<double, std::pair<double, double>> accum;  // phi -> (sum T w^2, sum w^4)
    std::string id;
    for (const auto& s : samples) {
        if (s.phi == 0.0) continue;
        auto& [num, den] = accum[s.phi];
        const double w2 = s.omega * s.omega;
        num += s.thrust * w2;
        den += w2 * w2;
        if (id.empty()) id = s.propeller_id;
    }
    if (accum.size() < 2) {
        throw IdentificationError("fit_angle_coefficient needs >= 2 occlusion angles, got " +
                                  std::to_string(accum.size()));
    }

    std::vector<std::pair<double, double>> points{{0.0, k_t}};  // nominal anchor
    for (const auto& [phi, nd] : accum) {
        if (nd.second <= 0.0) {
            throw IdentificationError("degenerate sweep at phi = " + std::to_string(phi));
        }
        points.emplace_back(phi, nd.first / nd.second);
    }

    const auto n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sy * sxx - sx * sxy) / det;
    if (slope >= 0.0) {
        throw IdentificationError("fitted slope is non-negative; bench data contradicts the "
                                  "decreasing-thrust trend");
    }

    AeroModel model;
    model.k_t = k_t;
    model.slope = slope;
    model.intercept = intercept;
    model.phi_valid = {0.0, points.back().first};
    model.propeller_id = id;
    model.validate();

    if (report != nullptr) {
        report->k_estimates = points;
        double ssr = 0.0, sst = 0.0, max_res = 0.0;
        const double mean_y = sy / n;
        for (const auto& [x, y] : points) {
            const double res = y - (intercept + slope * x);
            ssr += res * res;
            sst += (y - mean_y) * (y - mean_y);
            max_res = std::max(max_res, std::abs(res));
        }
        report->max_residual = max_res;
        report->r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
        const double dof = n - 2.0;
        report->slope_stderr =
            dof > 0.0 ? std::sqrt(ssr / dof / (sxx - sx * sx / n)) : 0.0;
    }
    return model;
}

CrossPropellerReport cross_propeller_report(const std::vector<AeroModel>& models) {
    CrossPropellerReport rep;
    std::ostringstream table;
    table << "pair, slope_ratio, intercept_offset, intercept_ratio, doubling_rule\n";
    for (std::size_t a = 0; a < models.size(); ++a) {
        for (std::size_t b = a + 1; b < models.size(); ++b) {
            PropellerPairRelation p;
            p.id_a = models[a].propeller_id;
            p.id_b = models[b].propeller_id;
            p.slope_ratio = models[a].slope / models[b].slope;
            p.intercept_offset = models[a].intercept - models[b].intercept;
            p.intercept_ratio = models[a].intercept / models[b].intercept;
            const double r = std::max(p.intercept_ratio, 1.0 / p.intercept_ratio);
            p.doubling_rule_pass = std::abs(r - 2.0) <= 0.25 * 2.0;
            table << p.id_a << "/" << p.id_b << ", " << p.slope_ratio << ", "
                  << p.intercept_offset << ", " << p.intercept_ratio << ", "
                  << (p.doubling_rule_pass ? "pass" : "off") << "\n";
            rep.pairs.push_back(std::move(p));
        }
    }
    rep.table = table.str();
    return rep;
}

BenchProtocol BenchProtocol::paper_default() {
    BenchProtocol p;
    p.phis = {0.0, deg_to_rad(45.0), deg_to_rad(90.0), deg_to_rad(180.0), deg_to_rad(270.0)};
    return p;
}

std::vector<BenchSample> generate_synthetic_bench(const AeroModel& true_model,
                                                  const BenchProtocol& protocol) {
    std::mt19937_64 rng(protocol.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<BenchSample> out;
    const std::vector<double> phis =
        protocol.phis.empty() ? BenchProtocol::paper_default().phis : protocol.phis;
    for (double phi : phis) {
        for (int step = 0; step < protocol.steps; ++step) {
            const double frac =
                protocol.steps > 1 ? static_cast<double>(step) / (protocol.steps - 1) : 0.0;
            const double rpm = protocol.rpm_min + frac * (protocol.rpm_max - protocol.rpm_min);
            const double omega = rpm_to_rad_s(rpm);
            for (int rep = 1; rep <= protocol.repetitions; ++rep) {
                BenchSample s;
                s.phi = phi;
                s.omega = omega;
                s.thrust = true_model.coefficient(phi) * omega * omega;
                if (protocol.noise_sigma > 0.0) {
                    s.thrust = std::max(0.0, s.thrust + protocol.noise_sigma * noise(rng));
                }
                s.repetition = rep;
                s.propeller_id = true_model.propeller_id;
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

std::string model_to_json(const AeroModel& model) {
    nlohmann::json j{{"propeller_id", model.propeller_id},
                     {"k_t", model.k_t},
                     {"slope_per_rad", model.slope},
                     {"intercept", model.intercept},
                     {"phi_valid_deg",
                      {rad_to_deg(model.phi_valid.first), rad_to_deg(model.phi_valid.second)}}};
    return j.dump(2);
}

AeroModel model_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model JSON parse error: " + std::string(e.what()));
    }
    AeroModel m;
    try {
        m.propeller_id = j.at("propeller_id").get<std::string>();
        m.k_t = j.at("k_t").get<double>();
        m.slope = j.at("slope_per_rad").get<double>();
        m.intercept = j.at("intercept").get<double>();
        m.phi_valid = {deg_to_rad(j.at("phi_valid_deg").at(0).get<double>()),
                       deg_to_rad(j.at("phi_valid_deg").at(1).get<double>())};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model JSON schema error: " + std::string(e.what()));
    }
    return m;
}

AeroModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model JSON: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json_string(ss.str());
}

void save_model(const AeroModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write model JSON: " + path);
    out << model_to_json(model) << "\n";
}

}  // namespace morphcomp
