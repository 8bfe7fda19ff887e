#include "fimsindy/dynamics.hpp"

#include "fimsindy/errors.hpp"
#include "fimsindy/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace fimsindy {

int SystemSpec::dim() const {
    switch (kind) {
        case SystemKind::Lorenz:
        case SystemKind::Rossler:
            return 3;
        case SystemKind::VanDerPol:
            return 2;
    }
    return 0;
}

double SystemSpec::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw ArgumentError("missing system parameter: " + name);
    return it->second;
}

std::vector<std::string> required_params(SystemKind kind) {
    switch (kind) {
        case SystemKind::Lorenz:
            return {"sigma", "rho", "beta"};
        case SystemKind::Rossler:
            return {"a", "b", "c"};
        case SystemKind::VanDerPol:
            return {"mu"};
    }
    return {};
}

void SystemSpec::validate() const {
    for (const auto& name : required_params(kind)) {
        if (!std::isfinite(param(name))) throw ArgumentError("non-finite system parameter: " + name);
    }
}

SystemSpec lorenz_system(double sigma, double rho, double beta) {
    return {SystemKind::Lorenz, {{"sigma", sigma}, {"rho", rho}, {"beta", beta}}};
}

SystemSpec rossler_system(double a, double b, double c) {
    return {SystemKind::Rossler, {{"a", a}, {"b", b}, {"c", c}}};
}

SystemSpec van_der_pol_system(double mu) { return {SystemKind::VanDerPol, {{"mu", mu}}}; }

SystemSpec system_from_name(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "lorenz") return lorenz_system();
    if (s == "rossler") return rossler_system();
    if (s == "vanderpol" || s == "vdp" || s == "van_der_pol") return van_der_pol_system();
    throw ArgumentError("unknown system: " + name);
}

std::string system_name(SystemKind kind) {
    switch (kind) {
        case SystemKind::Lorenz:
            return "lorenz";
        case SystemKind::Rossler:
            return "rossler";
        case SystemKind::VanDerPol:
            return "vanderpol";
    }
    return "";
}

Eigen::VectorXd rhs(const SystemSpec& spec, const Eigen::VectorXd& s) {
    if (s.size() != spec.dim()) throw ArgumentError("state dimension does not match system");
    Eigen::VectorXd out(spec.dim());
    switch (spec.kind) {
        case SystemKind::Lorenz: {
            const double sg = spec.param("sigma"), rho = spec.param("rho"), beta = spec.param("beta");
            out << sg * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2];
            break;
        }
        case SystemKind::Rossler: {
            const double a = spec.param("a"), b = spec.param("b"), c = spec.param("c");
            out << -s[1] - s[2], s[0] + a * s[1], b + s[2] * (s[0] - c);
            break;
        }
        case SystemKind::VanDerPol: {
            const double mu = spec.param("mu");
            out << s[1], mu * (1.0 - s[0] * s[0]) * s[1] - s[0];
            break;
        }
    }
    return out;
}

std::vector<std::vector<Monomial>> rhs_polynomial(const SystemSpec& spec) {
    switch (spec.kind) {
        case SystemKind::Lorenz: {
            const double sg = spec.param("sigma"), rho = spec.param("rho"), beta = spec.param("beta");
            return {
                {{-sg, {1, 0, 0}}, {sg, {0, 1, 0}}},
                {{rho, {1, 0, 0}}, {-1.0, {0, 1, 0}}, {-1.0, {1, 0, 1}}},
                {{1.0, {1, 1, 0}}, {-beta, {0, 0, 1}}},
            };
        }
        case SystemKind::Rossler: {
            const double a = spec.param("a"), b = spec.param("b"), c = spec.param("c");
            return {
                {{-1.0, {0, 1, 0}}, {-1.0, {0, 0, 1}}},
                {{1.0, {1, 0, 0}}, {a, {0, 1, 0}}},
                {{b, {0, 0, 0}}, {1.0, {1, 0, 1}}, {-c, {0, 0, 1}}},
            };
        }
        case SystemKind::VanDerPol: {
            const double mu = spec.param("mu");
            return {
                {{1.0, {0, 1}}},
                {{-1.0, {1, 0}}, {mu, {0, 1}}, {-mu, {2, 1}}},
            };
        }
    }
    return {};
}

double Trajectory::dt() const {
    if (times.size() < 2) return 0.0;
    return times[1] - times[0];
}

Trajectory Trajectory::slice(Eigen::Index begin, Eigen::Index end) const {
    if (begin < 0 || end > size() || begin >= end) throw ArgumentError("invalid trajectory slice");
    Trajectory t;
    t.times = times.segment(begin, end - begin);
    t.states = states.middleRows(begin, end - begin);
    t.noise_sigma = noise_sigma;
    t.seed = seed;
    return t;
}

Trajectory integrate(const RhsFn& f, const Eigen::VectorXd& initial, double t_end, double dt) {
    if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
    if (!(t_end >= 0.0)) throw ArgumentError("t_end must be nonnegative");
    const auto m = static_cast<Eigen::Index>(std::floor(t_end / dt + 1e-9)) + 1;
    const auto n = initial.size();
    Trajectory traj;
    traj.times.resize(m);
    traj.states.resize(m, n);
    Eigen::VectorXd x = initial;
    if (!x.allFinite()) throw IntegrationDiverged("non-finite initial state", 0.0);
    traj.times[0] = 0.0;
    traj.states.row(0) = x.transpose();
    for (Eigen::Index i = 1; i < m; ++i) {
        const Eigen::VectorXd k1 = f(x);
        const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = f(x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            std::ostringstream msg;
            msg << "integration diverged after t = " << traj.times[i - 1];
            throw IntegrationDiverged(msg.str(), traj.times[i - 1]);
        }
        traj.times[i] = static_cast<double>(i) * dt;
        traj.states.row(i) = x.transpose();
    }
    return traj;
}

Trajectory integrate(const SystemSpec& spec, const Eigen::VectorXd& initial, double t_end, double dt) {
    spec.validate();
    if (initial.size() != spec.dim()) throw ArgumentError("initial state dimension does not match system");
    return integrate([&spec](const Eigen::VectorXd& x) { return rhs(spec, x); }, initial, t_end, dt);
}

Eigen::VectorXd column_std(const Eigen::MatrixXd& x) {
    Eigen::VectorXd out(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        out[j] = std::sqrt((x.col(j).array() - mean).square().mean());
    }
    return out;
}

Trajectory add_noise(const Trajectory& traj, double level, long long seed) {
    if (!(level >= 0.0)) throw ArgumentError("noise level must be nonnegative");
    Trajectory out = traj;
    out.noise_sigma = level;
    out.seed = seed;
    if (level == 0.0) return out;
    const Eigen::VectorXd sd = column_std(traj.states);
    for (Eigen::Index j = 0; j < traj.dim(); ++j) {
        if (sd[j] == 0.0) continue;
        std::mt19937_64 rng(derive_seed(static_cast<unsigned long long>(seed), static_cast<unsigned long long>(j)));
        std::normal_distribution<double> normal(0.0, level * sd[j]);
        for (Eigen::Index i = 0; i < traj.size(); ++i) out.states(i, j) += normal(rng);
    }
    return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t";
    for (Eigen::Index j = 0; j < traj.dim(); ++j) out << ",x" << j;
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < traj.size(); ++i) {
        out << traj.times[i];
        for (Eigen::Index j = 0; j < traj.dim(); ++j) out << ',' << traj.states(i, j);
        out << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ArgumentError("empty trajectory CSV");
    std::size_t cols = std::count(line.begin(), line.end(), ',') + 1;
    if (cols < 2 || line.rfind("t,", 0) != 0) throw ArgumentError("trajectory CSV header must start with t,x0");
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t count = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ArgumentError("bad number in trajectory CSV row " + std::to_string(rows + 1));
            }
            ++count;
        }
        if (count != cols) throw ArgumentError("wrong column count in trajectory CSV row " + std::to_string(rows + 1));
        ++rows;
    }
    if (rows == 0) throw ArgumentError("trajectory CSV has no rows");
    Trajectory traj;
    traj.times.resize(static_cast<Eigen::Index>(rows));
    traj.states.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols - 1));
    for (std::size_t i = 0; i < rows; ++i) {
        traj.times[i] = values[i * cols];
        for (std::size_t j = 1; j < cols; ++j) traj.states(i, j - 1) = values[i * cols + j];
    }
    for (Eigen::Index i = 1; i < traj.times.size(); ++i) {
        if (!(traj.times[i] > traj.times[i - 1])) throw ArgumentError("trajectory times must be strictly increasing");
    }
    return traj;
}

}  // namespace fimsindy
