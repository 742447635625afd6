#include "acqsens/errors.hpp"
#include "acqsens/glmm.hpp"

#include <algorithm>
#include <set>

namespace acqsens {

const char* grouping_factor_name(GroupingFactor g) {
    return g == GroupingFactor::CaseId ? "CaseID" : "Method";
}

bool ModelSpec::has(FixedTerm term) const {
    return std::find(fixed_terms.begin(), fixed_terms.end(), term) != fixed_terms.end();
}

void ModelSpec::validate() const {
    if (!has(FixedTerm::Intercept))
        fail(ErrorCode::InvalidSpec, "model spec must contain an intercept");
    if (has(FixedTerm::QualityByMethod) &&
        !(has(FixedTerm::QualityFactor) && has(FixedTerm::MethodFactor)))
        fail(ErrorCode::InvalidSpec,
             "QualityByMethod requires both QualityFactor and MethodFactor");
    if (has(FixedTerm::DistanceByMethod) &&
        !(has(FixedTerm::DistanceCovariate) && has(FixedTerm::MethodFactor)))
        fail(ErrorCode::InvalidSpec,
             "DistanceByMethod requires both DistanceCovariate and MethodFactor");
    if (has(FixedTerm::QualityFactor) && has(FixedTerm::DistanceCovariate))
        fail(ErrorCode::InvalidSpec,
             "QualityFactor and DistanceCovariate are mutually exclusive");
    if (has(FixedTerm::MethodFactor) && reference_method.empty())
        fail(ErrorCode::InvalidSpec, "MethodFactor requires a reference method");
    std::set<GroupingFactor> seen(random_intercepts.begin(), random_intercepts.end());
    if (seen.size() != random_intercepts.size())
        fail(ErrorCode::InvalidSpec, "duplicate random intercept factor");
}

namespace {

bool column_constant(const Eigen::VectorXd& col) {
    for (Eigen::Index i = 1; i < col.size(); ++i)
        if (col[i] != col[0]) return false;
    return true;
}

} // namespace

DesignMatrices build_design(const PredictionTable& table, const ModelSpec& spec,
                            const std::vector<std::uint8_t>* quality,
                            const std::vector<double>* distance) {
    spec.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(table.n_records());

    if (spec.has(FixedTerm::QualityFactor)) {
        if (!quality || quality->size() != table.n_records())
            fail(ErrorCode::MissingCovariate, "quality labels required and must align with the table");
    }
    if (spec.has(FixedTerm::DistanceCovariate)) {
        if (!distance || distance->size() != table.n_records())
            fail(ErrorCode::MissingCovariate, "distances required and must align with the table");
    }

    DesignMatrices design;
    design.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) design.y[i] = table.failure(i);

    std::vector<std::string> other_methods;
    if (spec.has(FixedTerm::MethodFactor)) {
        if (table.n_methods() < 2)
            fail(ErrorCode::InvalidSpec, "MethodFactor requires at least 2 methods");
        const auto& methods = table.methods();
        if (std::find(methods.begin(), methods.end(), spec.reference_method) == methods.end())
            fail(ErrorCode::ReferenceMethodAbsent,
                 "reference method '" + spec.reference_method + "' not present in the table");
        for (const auto& m : methods)
            if (m != spec.reference_method) other_methods.push_back(m);
        design.reference_method = spec.reference_method;
        design.methods = other_methods;
    }

    // Treatment coding, columns in term order.
    std::vector<std::pair<CoefInfo, Eigen::VectorXd>> columns;
    auto add_column = [&](CoefInfo info, Eigen::VectorXd col) {
        columns.emplace_back(std::move(info), std::move(col));
    };

    for (FixedTerm term : spec.fixed_terms) {
        switch (term) {
            case FixedTerm::Intercept:
                add_column({"intercept", term, ""}, Eigen::VectorXd::Ones(n));
                break;
            case FixedTerm::QualityFactor: {
                Eigen::VectorXd col(n);
                for (Eigen::Index i = 0; i < n; ++i) col[i] = (*quality)[i];
                add_column({"quality", term, ""}, std::move(col));
                break;
            }
            case FixedTerm::DistanceCovariate: {
                Eigen::VectorXd col(n);
                for (Eigen::Index i = 0; i < n; ++i) col[i] = (*distance)[i];
                add_column({"distance", term, ""}, std::move(col));
                break;
            }
            case FixedTerm::MethodFactor:
                for (const auto& m : other_methods) {
                    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
                    for (Eigen::Index i = 0; i < n; ++i)
                        if (table.records()[i].method == m) col[i] = 1.0;
                    add_column({"method[" + m + "]", term, m}, std::move(col));
                }
                break;
            case FixedTerm::QualityByMethod:
                for (const auto& m : other_methods) {
                    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
                    for (Eigen::Index i = 0; i < n; ++i)
                        if (table.records()[i].method == m) col[i] = (*quality)[i];
                    add_column({"quality:method[" + m + "]", term, m}, std::move(col));
                }
                break;
            case FixedTerm::DistanceByMethod:
                for (const auto& m : other_methods) {
                    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
                    for (Eigen::Index i = 0; i < n; ++i)
                        if (table.records()[i].method == m) col[i] = (*distance)[i];
                    add_column({"distance:method[" + m + "]", term, m}, std::move(col));
                }
                break;
        }
    }

    design.X.resize(n, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        design.coef.push_back(columns[c].first);
        design.X.col(static_cast<Eigen::Index>(c)) = columns[c].second;
    }

    // Constant non-intercept columns and exact duplicates make the design
    // rank deficient.
    for (std::size_t c = 1; c < columns.size(); ++c) {
        if (column_constant(design.X.col(static_cast<Eigen::Index>(c))))
            fail(ErrorCode::RankDeficientDesign,
                 "column '" + design.coef[c].name + "' is constant");
        for (std::size_t d = 0; d < c; ++d) {
            if (design.X.col(static_cast<Eigen::Index>(c)) ==
                design.X.col(static_cast<Eigen::Index>(d)))
                fail(ErrorCode::RankDeficientDesign,
                     "columns '" + design.coef[d].name + "' and '" + design.coef[c].name +
                         "' are identical");
        }
    }

    for (GroupingFactor factor : spec.random_intercepts) {
        DesignMatrices::RandomBlock block;
        block.factor = factor;
        block.levels = factor == GroupingFactor::CaseId ? table.cases() : table.methods();
        const Eigen::Index q = static_cast<Eigen::Index>(block.levels.size());
        block.Z.resize(n, q);
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(table.n_records());
        for (Eigen::Index i = 0; i < n; ++i) {
            int level = factor == GroupingFactor::CaseId ? table.case_index(i)
                                                         : table.method_index(i);
            triplets.emplace_back(i, level, 1.0);
        }
        block.Z.setFromTriplets(triplets.begin(), triplets.end());
        design.blocks.push_back(std::move(block));
    }

    return design;
}

int GlmmFit::coef_index(std::string_view name) const {
    for (std::size_t i = 0; i < coef.size(); ++i)
        if (coef[i].name == name) return static_cast<int>(i);
    return -1;
}

bool GlmmFit::has_term(FixedTerm term) const {
    for (const auto& c : coef)
        if (c.term == term) return true;
    return false;
}

} // namespace acqsens
