#pragma once

#include "mar/core/error.hpp"

#include <algorithm>
#include <string>

namespace mar::retrieval {

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& u,
                                            const Eigen::MatrixBase<DerivedB>& v) {
    using Scalar = typename DerivedA::Scalar;
    if (u.size() != v.size())
        throw DimensionMismatch("cosine_similarity: " + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()));
    const Scalar nu = u.norm();
    const Scalar nv = v.norm();
    if (nu == Scalar(0) || nv == Scalar(0)) return Scalar(0);
    const Scalar c = u.dot(v) / (nu * nv);
    return std::clamp(c, Scalar(-1), Scalar(1));
}

}  // namespace mar::retrieval
