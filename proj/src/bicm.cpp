#include "backbone/bicm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

#include "backbone/error.hpp"
#include "backbone/rng.hpp"

namespace backbone {

namespace {

constexpr std::size_t kSatClass = 0;
constexpr std::size_t kZeroClass = 1;

double bernoulli_prob(double x, double y) {
    double t = x * y;
    if (!std::isfinite(t)) return 1.0;
    return t / (1.0 + t);
}

// One layer of the reduced class system: distinct degree -> multiplier.
struct ClassSystem {
    std::vector<double> degrees;  // reduced degree per class
    std::vector<double> counts;   // nodes per class
    std::vector<double> mult;
};

double sweep_residual(const ClassSystem& rows, const ClassSystem& cols) {
    double res = 0.0;
    for (std::size_t i = 0; i < rows.degrees.size(); ++i) {
        double expect = 0.0;
        for (std::size_t j = 0; j < cols.degrees.size(); ++j) {
            expect += cols.counts[j] * bernoulli_prob(rows.mult[i], cols.mult[j]);
        }
        res = std::max(res, std::fabs(expect - rows.degrees[i]));
    }
    for (std::size_t j = 0; j < cols.degrees.size(); ++j) {
        double expect = 0.0;
        for (std::size_t i = 0; i < rows.degrees.size(); ++i) {
            expect += rows.counts[i] * bernoulli_prob(rows.mult[i], cols.mult[j]);
        }
        res = std::max(res, std::fabs(expect - cols.degrees[j]));
    }
    return res;
}

void fixed_point_sweep(ClassSystem& rows, ClassSystem& cols, double damping) {
    for (std::size_t i = 0; i < rows.degrees.size(); ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < cols.degrees.size(); ++j) {
            denom += cols.counts[j] * cols.mult[j] / (1.0 + rows.mult[i] * cols.mult[j]);
        }
        double candidate = rows.degrees[i] / denom;
        rows.mult[i] = (1.0 - damping) * rows.mult[i] + damping * candidate;
    }
    for (std::size_t j = 0; j < cols.degrees.size(); ++j) {
        double denom = 0.0;
        for (std::size_t i = 0; i < rows.degrees.size(); ++i) {
            denom += rows.counts[i] * rows.mult[i] / (1.0 + rows.mult[i] * cols.mult[j]);
        }
        double candidate = cols.degrees[j] / denom;
        cols.mult[j] = (1.0 - damping) * cols.mult[j] + damping * candidate;
    }
}

// Coordinate-wise 1D Newton on each layer's degree equation; the per-class
// equation is monotone in its own multiplier.
void quasi_newton_sweep(ClassSystem& rows, ClassSystem& cols) {
    for (std::size_t i = 0; i < rows.degrees.size(); ++i) {
        double f = -rows.degrees[i], df = 0.0;
        for (std::size_t j = 0; j < cols.degrees.size(); ++j) {
            double t = 1.0 + rows.mult[i] * cols.mult[j];
            f += cols.counts[j] * rows.mult[i] * cols.mult[j] / t;
            df += cols.counts[j] * cols.mult[j] / (t * t);
        }
        double next = rows.mult[i] - f / df;
        rows.mult[i] = next > 0.0 ? next : rows.mult[i] * 0.5;
    }
    for (std::size_t j = 0; j < cols.degrees.size(); ++j) {
        double f = -cols.degrees[j], df = 0.0;
        for (std::size_t i = 0; i < rows.degrees.size(); ++i) {
            double t = 1.0 + rows.mult[i] * cols.mult[j];
            f += rows.counts[i] * rows.mult[i] * cols.mult[j] / t;
            df += rows.counts[i] * rows.mult[i] / (t * t);
        }
        double next = cols.mult[j] - f / df;
        cols.mult[j] = next > 0.0 ? next : cols.mult[j] * 0.5;
    }
}

} // namespace

BicmModel fit_bicm(const BipartiteGraph& g, const FitConfig& cfg) {
    if (cfg.tolerance <= 0.0) throw InputError("tolerance must be positive");
    if (cfg.max_iterations < 1) throw InputError("max_iterations must be >= 1");
    if (cfg.damping <= 0.0 || cfg.damping > 1.0) throw InputError("damping must be in (0,1]");

    BicmModel m;
    m.row_ids_ = g.row_ids();
    m.col_ids_ = g.col_ids();
    m.observed_ = g.degree_sequences();
    m.graph_fingerprint_ = g.fingerprint();

    const std::size_t R = g.n_rows(), C = g.n_cols();
    const auto& k = m.observed_.row_degrees;
    const auto& h = m.observed_.col_degrees;

    m.row_states_.assign(R, BicmModel::NodeState::fitted);
    m.col_states_.assign(C, BicmModel::NodeState::fitted);
    std::size_t sat_rows = 0, sat_cols = 0;
    for (std::size_t r = 0; r < R; ++r) {
        if (k[r] == static_cast<std::int64_t>(C)) {
            m.row_states_[r] = BicmModel::NodeState::saturated;
            ++sat_rows;
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (h[c] == static_cast<std::int64_t>(R)) {
            m.col_states_[c] = BicmModel::NodeState::saturated;
            ++sat_cols;
        }
    }

    // A saturated column is linked to every row, so each surviving row loses
    // exactly sat_cols links in the reduced problem (and symmetrically).
    std::vector<std::int64_t> k_red(R, 0), h_red(C, 0);
    std::size_t zero_rows = 0, zero_cols = 0;
    for (std::size_t r = 0; r < R; ++r) {
        if (m.row_states_[r] != BicmModel::NodeState::fitted) continue;
        k_red[r] = k[r] - static_cast<std::int64_t>(sat_cols);
        if (k_red[r] == 0) {
            m.row_states_[r] = BicmModel::NodeState::zero;
            ++zero_rows;
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (m.col_states_[c] != BicmModel::NodeState::fitted) continue;
        h_red[c] = h[c] - static_cast<std::int64_t>(sat_rows);
        if (h_red[c] == 0) {
            m.col_states_[c] = BicmModel::NodeState::zero;
            ++zero_cols;
        }
    }

    std::size_t fit_rows = 0, fit_cols = 0;
    for (std::size_t r = 0; r < R; ++r) {
        if (m.row_states_[r] == BicmModel::NodeState::fitted) ++fit_rows;
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (m.col_states_[c] == BicmModel::NodeState::fitted) ++fit_cols;
    }
    for (std::size_t r = 0; r < R; ++r) {
        if (m.row_states_[r] == BicmModel::NodeState::fitted &&
            k_red[r] >= static_cast<std::int64_t>(fit_cols)) {
            throw InputError("degenerate degree: row " + g.row_id(r) +
                             " saturates the reduced layer");
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (m.col_states_[c] == BicmModel::NodeState::fitted &&
            h_red[c] >= static_cast<std::int64_t>(fit_rows)) {
            throw InputError("degenerate degree: column " + g.col_id(c) +
                             " saturates the reduced layer");
        }
    }

    m.report_.saturated_rows = sat_rows;
    m.report_.saturated_cols = sat_cols;
    m.report_.zero_rows = zero_rows;
    m.report_.zero_cols = zero_cols;

    // Degree-equivalence classes: nodes with equal degree share a multiplier.
    std::map<std::int64_t, std::size_t> row_deg_class, col_deg_class;
    for (std::size_t r = 0; r < R; ++r) {
        if (m.row_states_[r] == BicmModel::NodeState::fitted) row_deg_class[k_red[r]] = 0;
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (m.col_states_[c] == BicmModel::NodeState::fitted) col_deg_class[h_red[c]] = 0;
    }
    ClassSystem rows, cols;
    {
        std::size_t next = 2;  // 0, 1 reserved for the saturated/zero pseudo-classes
        for (auto& [deg, cls] : row_deg_class) {
            cls = next++;
            rows.degrees.push_back(static_cast<double>(deg));
            rows.counts.push_back(0.0);
        }
        next = 2;
        for (auto& [deg, cls] : col_deg_class) {
            cls = next++;
            cols.degrees.push_back(static_cast<double>(deg));
            cols.counts.push_back(0.0);
        }
    }
    m.row_class_.assign(R, kSatClass);
    m.col_class_.assign(C, kSatClass);
    std::size_t sat_row_count = 0, zero_row_count = 0, sat_col_count = 0, zero_col_count = 0;
    for (std::size_t r = 0; r < R; ++r) {
        switch (m.row_states_[r]) {
            case BicmModel::NodeState::saturated:
                m.row_class_[r] = kSatClass;
                ++sat_row_count;
                break;
            case BicmModel::NodeState::zero:
                m.row_class_[r] = kZeroClass;
                ++zero_row_count;
                break;
            case BicmModel::NodeState::fitted:
                m.row_class_[r] = row_deg_class[k_red[r]];
                rows.counts[m.row_class_[r] - 2] += 1.0;
                break;
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        switch (m.col_states_[c]) {
            case BicmModel::NodeState::saturated:
                m.col_class_[c] = kSatClass;
                ++sat_col_count;
                break;
            case BicmModel::NodeState::zero:
                m.col_class_[c] = kZeroClass;
                ++zero_col_count;
                break;
            case BicmModel::NodeState::fitted:
                m.col_class_[c] = col_deg_class[h_red[c]];
                cols.counts[m.col_class_[c] - 2] += 1.0;
                break;
        }
    }

    if (!rows.degrees.empty()) {
        double links_red = 0.0;
        for (std::size_t i = 0; i < rows.degrees.size(); ++i) {
            links_red += rows.counts[i] * rows.degrees[i];
        }
        const double inv_sqrt_l = 1.0 / std::sqrt(links_red);
        rows.mult.resize(rows.degrees.size());
        cols.mult.resize(cols.degrees.size());
        for (std::size_t i = 0; i < rows.degrees.size(); ++i) {
            rows.mult[i] = rows.degrees[i] * inv_sqrt_l;
        }
        for (std::size_t j = 0; j < cols.degrees.size(); ++j) {
            cols.mult[j] = cols.degrees[j] * inv_sqrt_l;
        }

        double residual = sweep_residual(rows, cols);
        int iter = 0;
        while (residual > cfg.tolerance && iter < cfg.max_iterations) {
            if (cfg.method == FitMethod::fixed_point) {
                fixed_point_sweep(rows, cols, cfg.damping);
            } else {
                quasi_newton_sweep(rows, cols);
            }
            residual = sweep_residual(rows, cols);
            ++iter;
        }
        m.report_.iterations = iter;
        m.report_.max_residual = residual;
        m.report_.converged = residual <= cfg.tolerance;
        if (!m.report_.converged) {
            std::ostringstream msg;
            msg << "bicm fit did not converge within " << cfg.max_iterations
                << " iterations (max residual " << residual << ")";
            throw std::runtime_error(msg.str());
        }

        // Probabilities pin only the products x_r * y_c; fix the remaining
        // scale freedom by balancing the layers' mean log-multipliers so
        // reported multipliers do not depend on the solver path.
        {
            double log_x = 0.0, log_y = 0.0, n_x = 0.0, n_y = 0.0;
            for (std::size_t i = 0; i < rows.mult.size(); ++i) {
                log_x += rows.counts[i] * std::log(rows.mult[i]);
                n_x += rows.counts[i];
            }
            for (std::size_t j = 0; j < cols.mult.size(); ++j) {
                log_y += cols.counts[j] * std::log(cols.mult[j]);
                n_y += cols.counts[j];
            }
            const double shift = std::exp((log_y / n_y - log_x / n_x) / 2.0);
            for (auto& x : rows.mult) x *= shift;
            for (auto& y : cols.mult) y /= shift;
        }
    } else {
        // Everything saturated or zero: degrees are reproduced exactly.
        m.report_.converged = true;
    }

    m.row_x_.assign(R, 0.0);
    m.col_y_.assign(C, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
        if (m.row_states_[r] == BicmModel::NodeState::fitted) {
            m.row_x_[r] = rows.mult[m.row_class_[r] - 2];
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (m.col_states_[c] == BicmModel::NodeState::fitted) {
            m.col_y_[c] = cols.mult[m.col_class_[c] - 2];
        }
    }

    m.row_class_sizes_.assign(2 + rows.degrees.size(), 0);
    m.col_class_sizes_.assign(2 + cols.degrees.size(), 0);
    m.row_class_sizes_[kSatClass] = sat_row_count;
    m.row_class_sizes_[kZeroClass] = zero_row_count;
    m.col_class_sizes_[kSatClass] = sat_col_count;
    m.col_class_sizes_[kZeroClass] = zero_col_count;
    for (std::size_t i = 0; i < rows.counts.size(); ++i) {
        m.row_class_sizes_[i + 2] = static_cast<std::size_t>(rows.counts[i]);
    }
    for (std::size_t j = 0; j < cols.counts.size(); ++j) {
        m.col_class_sizes_[j + 2] = static_cast<std::size_t>(cols.counts[j]);
    }

    m.build_prob_table();
    return m;
}

void BicmModel::build_prob_table() {
    const std::size_t NR = row_class_sizes_.size(), NC = col_class_sizes_.size();
    prob_table_.assign(NR * NC, 0.0);

    // Representative multiplier per fitted class.
    std::vector<double> xc(NR, 0.0), yc(NC, 0.0);
    for (std::size_t r = 0; r < row_class_.size(); ++r) {
        if (row_states_[r] == NodeState::fitted) xc[row_class_[r]] = row_x_[r];
    }
    for (std::size_t c = 0; c < col_class_.size(); ++c) {
        if (col_states_[c] == NodeState::fitted) yc[col_class_[c]] = col_y_[c];
    }
    for (std::size_t i = 0; i < NR; ++i) {
        for (std::size_t j = 0; j < NC; ++j) {
            double p;
            if (i == kSatClass || j == kSatClass) {
                p = 1.0;
            } else if (i == kZeroClass || j == kZeroClass) {
                p = 0.0;
            } else {
                p = bernoulli_prob(xc[i], yc[j]);
            }
            prob_table_[i * NC + j] = p;
        }
    }
}

ExpectedDegrees BicmModel::expected_degrees() const {
    ExpectedDegrees e;
    e.rows.resize(n_rows());
    e.cols.resize(n_cols());
    const std::size_t NC = n_col_classes(), NR = n_row_classes();
    for (std::size_t r = 0; r < n_rows(); ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < NC; ++j) {
            sum += static_cast<double>(col_class_sizes_[j]) * prob_table_[row_class_[r] * NC + j];
        }
        e.rows[r] = sum;
    }
    for (std::size_t c = 0; c < n_cols(); ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < NR; ++i) {
            sum += static_cast<double>(row_class_sizes_[i]) * prob_table_[i * NC + col_class_[c]];
        }
        e.cols[c] = sum;
    }
    return e;
}

double BicmModel::row_multiplier(std::size_t r) const {
    switch (row_states_[r]) {
        case NodeState::saturated: return std::numeric_limits<double>::infinity();
        case NodeState::zero: return 0.0;
        default: return row_x_[r];
    }
}

double BicmModel::col_multiplier(std::size_t c) const {
    switch (col_states_[c]) {
        case NodeState::saturated: return std::numeric_limits<double>::infinity();
        case NodeState::zero: return 0.0;
        default: return col_y_[c];
    }
}

BicmModel::PairNull BicmModel::row_pair_null(std::size_t r, std::size_t r2) const {
    if (r == r2) throw InputError("self-similarity undefined");
    const std::size_t NC = n_col_classes();
    const double* pa = &prob_table_[row_class_[r] * NC];
    const double* pb = &prob_table_[row_class_[r2] * NC];
    double mu = 0.0, lecam = 0.0;
    for (std::size_t j = 0; j < NC; ++j) {
        const double prod = pa[j] * pb[j];
        const double n = static_cast<double>(col_class_sizes_[j]);
        mu += n * prod;
        lecam += n * prod * prod;
    }
    return {mu, 2.0 * lecam};
}

BicmModel::PairNull BicmModel::col_pair_null(std::size_t c, std::size_t c2) const {
    if (c == c2) throw InputError("self-similarity undefined");
    const std::size_t NC = n_col_classes(), NR = n_row_classes();
    double mu = 0.0, lecam = 0.0;
    for (std::size_t i = 0; i < NR; ++i) {
        const double prod = prob_table_[i * NC + col_class_[c]] * prob_table_[i * NC + col_class_[c2]];
        const double n = static_cast<double>(row_class_sizes_[i]);
        mu += n * prod;
        lecam += n * prod * prod;
    }
    return {mu, 2.0 * lecam};
}

std::vector<double> BicmModel::row_pair_products(std::size_t r, std::size_t r2) const {
    if (r == r2) throw InputError("self-similarity undefined");
    const std::size_t NC = n_col_classes();
    const double* pa = &prob_table_[row_class_[r] * NC];
    const double* pb = &prob_table_[row_class_[r2] * NC];
    std::vector<double> out(n_cols());
    for (std::size_t c = 0; c < n_cols(); ++c) {
        out[c] = pa[col_class_[c]] * pb[col_class_[c]];
    }
    return out;
}

std::vector<double> BicmModel::col_pair_products(std::size_t c, std::size_t c2) const {
    if (c == c2) throw InputError("self-similarity undefined");
    const std::size_t NC = n_col_classes();
    std::vector<double> out(n_rows());
    for (std::size_t r = 0; r < n_rows(); ++r) {
        out[r] = prob_table_[row_class_[r] * NC + col_class_[c]] *
                 prob_table_[row_class_[r] * NC + col_class_[c2]];
    }
    return out;
}

std::vector<IdEdge> BicmModel::sample_edges(std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<IdEdge> edges;
    for (std::size_t r = 0; r < n_rows(); ++r) {
        for (std::size_t c = 0; c < n_cols(); ++c) {
            const double p = link_probability(r, c);
            if (rng.next_double() < p) edges.emplace_back(row_ids_[r], col_ids_[c]);
        }
    }
    return edges;
}

BipartiteGraph BicmModel::sample(std::uint64_t seed) const {
    return BipartiteGraph::from_edges(sample_edges(seed), row_ids_, col_ids_);
}

void BicmModel::save(const std::string& path) const {
    nlohmann::json j;
    j["format"] = "bicm-model";
    j["version"] = 1;
    j["row_ids"] = row_ids_;
    j["col_ids"] = col_ids_;
    j["row_degrees"] = observed_.row_degrees;
    j["col_degrees"] = observed_.col_degrees;
    auto states = [](const std::vector<NodeState>& v) {
        std::vector<int> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<int>(v[i]);
        return out;
    };
    j["row_states"] = states(row_states_);
    j["col_states"] = states(col_states_);
    j["row_x"] = row_x_;
    j["col_y"] = col_y_;
    j["graph_fingerprint"] = graph_fingerprint_;
    j["fit"] = {{"iterations", report_.iterations},
                {"max_residual", report_.max_residual},
                {"converged", report_.converged},
                {"saturated_rows", report_.saturated_rows},
                {"saturated_cols", report_.saturated_cols},
                {"zero_rows", report_.zero_rows},
                {"zero_cols", report_.zero_cols}};
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(2) << '\n';
}

BicmModel BicmModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("invalid model file: ") + e.what());
    }
    if (j.value("format", "") != "bicm-model") throw InputError("not a model file: " + path);

    BicmModel m;
    m.row_ids_ = j.at("row_ids").get<std::vector<std::string>>();
    m.col_ids_ = j.at("col_ids").get<std::vector<std::string>>();
    m.observed_.row_degrees = j.at("row_degrees").get<std::vector<std::int64_t>>();
    m.observed_.col_degrees = j.at("col_degrees").get<std::vector<std::int64_t>>();
    auto to_states = [](const std::vector<int>& v) {
        std::vector<NodeState> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<NodeState>(v[i]);
        return out;
    };
    m.row_states_ = to_states(j.at("row_states").get<std::vector<int>>());
    m.col_states_ = to_states(j.at("col_states").get<std::vector<int>>());
    m.row_x_ = j.at("row_x").get<std::vector<double>>();
    m.col_y_ = j.at("col_y").get<std::vector<double>>();
    m.graph_fingerprint_ = j.at("graph_fingerprint").get<std::uint64_t>();
    const auto& f = j.at("fit");
    m.report_.iterations = f.at("iterations").get<int>();
    m.report_.max_residual = f.at("max_residual").get<double>();
    m.report_.converged = f.at("converged").get<bool>();
    m.report_.saturated_rows = f.at("saturated_rows").get<std::size_t>();
    m.report_.saturated_cols = f.at("saturated_cols").get<std::size_t>();
    m.report_.zero_rows = f.at("zero_rows").get<std::size_t>();
    m.report_.zero_cols = f.at("zero_cols").get<std::size_t>();

    // Rebuild degree-equivalence classes: fitted nodes with equal observed
    // degree share a class (and, by construction, a multiplier).
    std::map<std::int64_t, std::size_t> row_deg_class, col_deg_class;
    for (std::size_t r = 0; r < m.row_states_.size(); ++r) {
        if (m.row_states_[r] == NodeState::fitted) row_deg_class[m.observed_.row_degrees[r]] = 0;
    }
    for (std::size_t c = 0; c < m.col_states_.size(); ++c) {
        if (m.col_states_[c] == NodeState::fitted) col_deg_class[m.observed_.col_degrees[c]] = 0;
    }
    std::size_t next = 2;
    for (auto& [deg, cls] : row_deg_class) cls = next++;
    m.row_class_sizes_.assign(next, 0);
    next = 2;
    for (auto& [deg, cls] : col_deg_class) cls = next++;
    m.col_class_sizes_.assign(next, 0);

    m.row_class_.assign(m.row_states_.size(), kSatClass);
    m.col_class_.assign(m.col_states_.size(), kSatClass);
    for (std::size_t r = 0; r < m.row_states_.size(); ++r) {
        std::size_t cls = kSatClass;
        if (m.row_states_[r] == NodeState::zero) cls = kZeroClass;
        if (m.row_states_[r] == NodeState::fitted) cls = row_deg_class[m.observed_.row_degrees[r]];
        m.row_class_[r] = cls;
        ++m.row_class_sizes_[cls];
    }
    for (std::size_t c = 0; c < m.col_states_.size(); ++c) {
        std::size_t cls = kSatClass;
        if (m.col_states_[c] == NodeState::zero) cls = kZeroClass;
        if (m.col_states_[c] == NodeState::fitted) cls = col_deg_class[m.observed_.col_degrees[c]];
        m.col_class_[c] = cls;
        ++m.col_class_sizes_[cls];
    }
    m.build_prob_table();
    return m;
}

} // namespace backbone
