#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "stochlab/config.hpp"
#include "stochlab/generator.hpp"
#include "stochlab/jet.hpp"
#include "stochlab/rotor.hpp"

namespace stochlab {

/// Everything the lab needs to study one closed-loop system: the model, its
/// Lyapunov data, the analytic generator closed forms, the M_v constraint
/// residual and the conserved quantities the system must respect.
struct LabProblem {
    ModelKind kind = ModelKind::Jet;
    SdeModel closed;
    SdeModel open;  // u = 0 negative control
    ScalarField V;
    std::function<double(const Eigen::VectorXd&)> LV;
    std::optional<ScalarField> auxW;
    std::function<double(const Eigen::VectorXd&)> LW;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mv_residual;
    SandwichBounds sandwich;
    std::vector<std::string> state_names;
    Eigen::VectorXd default_x0;
    std::vector<std::pair<std::string, std::function<double(const Eigen::VectorXd&)>>> conserved;
};

inline LabProblem make_jet_problem(const JetParams& p) {
    LabProblem lab;
    lab.kind = ModelKind::Jet;
    lab.closed = jet_closed_model(p);
    lab.open = jet_open_model(p);
    lab.V = jet_lyapunov(p);
    lab.LV = [p](const Eigen::VectorXd& x) { return jet_LV_analytic(p, x); };
    lab.auxW = jet_aux_W(p);
    lab.LW = [p](const Eigen::VectorXd& x) { return jet_LW_analytic(p, x); };
    lab.mv_residual = jet_mv_residual(p);
    lab.sandwich = jet_sandwich_bounds(p);
    lab.state_names = jet_state_names();
    lab.default_x0 = jet_default_x0();
    lab.conserved.emplace_back("nu_norm2", [](const Eigen::VectorXd& x) {
        return jet_geometric_integral(x);
    });
    return lab;
}

inline LabProblem make_rotor_problem(const RotorParams& p) {
    LabProblem lab;
    lab.kind = ModelKind::Rotor;
    lab.closed = rotor_closed_model(p);
    {
        RotorParams open_p = p;
        SdeModel m;
        m.dim_state = rotor_dim;
        m.dim_noise = p.noise_dim();
        m.y_indices = rotor_y_indices();
        m.drift = [open_p](const Eigen::VectorXd& x, Eigen::VectorXd& f) {
            f = rotor_drift_open(open_p, x, Eigen::Vector2d::Zero());
        };
        m.diffusion = [open_p](const Eigen::VectorXd& x, Eigen::MatrixXd& s) {
            rotor_diffusion(open_p, x, s);
        };
        lab.open = std::move(m);
    }
    lab.V = rotor_lyapunov(p);
    lab.LV = [p](const Eigen::VectorXd& x) { return rotor_LV_analytic(p, x); };
    lab.mv_residual = rotor_mv_residual(p);
    lab.sandwich = rotor_sandwich_bounds(p);
    lab.state_names = rotor_state_names();
    lab.default_x0 = rotor_default_x0();
    lab.conserved.emplace_back("W1", [p](const Eigen::VectorXd& x) { return rotor_integrals(p, x)[0]; });
    lab.conserved.emplace_back("W2", [p](const Eigen::VectorXd& x) { return rotor_integrals(p, x)[1]; });
    lab.conserved.emplace_back("W3", [p](const Eigen::VectorXd& x) { return rotor_integrals(p, x)[2]; });
    return lab;
}

inline LabProblem make_problem(const RunConfig& cfg) {
    return cfg.model == ModelKind::Jet ? make_jet_problem(cfg.jet) : make_rotor_problem(cfg.rotor);
}

}  // namespace stochlab
