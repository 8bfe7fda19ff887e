#include "fimsindy/io.hpp"

#include "fimsindy/errors.hpp"

namespace fimsindy {

nlohmann::json model_to_json(const SparseModel& model) {
    nlohmann::json j;
    std::vector<std::string> labels;
    for (const auto& t : model.terms) labels.push_back(t.label);
    j["terms"] = labels;
    j["equations"] = nlohmann::json::array();
    for (Eigen::Index e = 0; e < model.coefficients.cols(); ++e) {
        std::vector<double> c(model.coefficients.col(e).data(), model.coefficients.col(e).data() + model.coefficients.rows());
        j["equations"].push_back({{"target", "x" + std::to_string(e)}, {"coefficients", c}});
    }
    j["threshold"] = model.threshold;
    j["ridge_alpha"] = model.ridge_alpha;
    j["iterations"] = model.iterations;
    j["empty_warning"] = model.empty_warning;
    return j;
}

SparseModel model_from_json(const nlohmann::json& j) {
    try {
        SparseModel m;
        const auto labels = j.at("terms").get<std::vector<std::string>>();
        const auto& eqs = j.at("equations");
        const Eigen::Index q = static_cast<Eigen::Index>(labels.size());
        const Eigen::Index n = static_cast<Eigen::Index>(eqs.size());
        for (const auto& l : labels) m.terms.push_back(parse_term_label(l, static_cast<int>(n)));
        m.coefficients.resize(q, n);
        for (Eigen::Index e = 0; e < n; ++e) {
            const auto c = eqs[static_cast<std::size_t>(e)].at("coefficients").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(c.size()) != q) throw ArgumentError("model json: coefficient count mismatch");
            for (Eigen::Index i = 0; i < q; ++i) m.coefficients(i, e) = c[static_cast<std::size_t>(i)];
        }
        m.active = m.coefficients.array() != 0.0;
        m.threshold = j.value("threshold", 0.0);
        m.ridge_alpha = j.value("ridge_alpha", 0.0);
        m.iterations = j.value("iterations", 0);
        m.empty_warning = j.value("empty_warning", false);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("model json: ") + e.what());
    }
}

}  // namespace fimsindy
