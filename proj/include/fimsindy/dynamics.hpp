#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace fimsindy {

enum class SystemKind { Lorenz, Rossler, VanDerPol };

struct SystemSpec {
    SystemKind kind = SystemKind::Lorenz;
    std::map<std::string, double> params;

    int dim() const;
    double param(const std::string& name) const;
    /// Throws ArgumentError if a required parameter is missing or non-finite.
    void validate() const;
};

SystemSpec lorenz_system(double sigma = 10.0, double rho = 28.0, double beta = 2.66667);
SystemSpec rossler_system(double a = 0.2, double b = 0.2, double c = 5.7);
SystemSpec van_der_pol_system(double mu = 0.8);

/// "lorenz", "rossler", "vanderpol" (also "vdp"), with default parameters.
SystemSpec system_from_name(const std::string& name);
std::string system_name(SystemKind kind);
std::vector<std::string> required_params(SystemKind kind);

/// f(x; theta) for the given system.
Eigen::VectorXd rhs(const SystemSpec& spec, const Eigen::VectorXd& state);

/// One monomial term c * prod x_i^e_i.
struct Monomial {
    double coefficient;
    std::vector<int> exponents;
};

/// Right-hand side written out in the monomial basis, one list per equation.
std::vector<std::vector<Monomial>> rhs_polynomial(const SystemSpec& spec);

using RhsFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Trajectory {
    Eigen::VectorXd times;
    Eigen::MatrixXd states;  // m x n
    double noise_sigma = 0.0;
    long long seed = 0;

    Eigen::Index size() const { return states.rows(); }
    Eigen::Index dim() const { return states.cols(); }
    double dt() const;
    /// Rows [begin, end) as a new trajectory.
    Trajectory slice(Eigen::Index begin, Eigen::Index end) const;
};

/// Fixed-step classical RK4; m = floor(t_end/dt) + 1 samples from t = 0.
Trajectory integrate(const SystemSpec& spec, const Eigen::VectorXd& initial, double t_end, double dt);
Trajectory integrate(const RhsFn& f, const Eigen::VectorXd& initial, double t_end, double dt);

/// Adds N(0, (level * std(column))^2) per column. Column j draws from its own
/// stream seeded by (seed, j).
Trajectory add_noise(const Trajectory& traj, double level, long long seed);

/// CSV with header t,x0,x1,... at 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

/// Population standard deviation of each column.
Eigen::VectorXd column_std(const Eigen::MatrixXd& x);

}  // namespace fimsindy
