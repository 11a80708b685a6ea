#pragma once

// JSON encoding of Eigen types. Doubles are written in their shortest
// round-trip form, so decode(encode(x)) == x bit for bit.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

namespace blendrec::detail {

template <typename Derived>
nlohmann::json matrix_to_json(const Eigen::DenseBase<Derived>& m)
{
    std::vector<typename Derived::Scalar> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            data.push_back(m(r, c));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

template <typename Matrix>
Matrix matrix_from_json(const nlohmann::json& j)
{
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (data.size() != static_cast<std::size_t>(rows * cols))
        throw std::runtime_error("matrix payload size mismatch");
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            m(r, c) = data[k++].get<typename Matrix::Scalar>();
    return m;
}

template <typename Vector>
Vector vector_from_json(const nlohmann::json& j)
{
    const auto& data = j.at("data");
    Vector v(static_cast<Eigen::Index>(data.size()));
    for (std::size_t k = 0; k < data.size(); ++k)
        v[static_cast<Eigen::Index>(k)] = data[k].get<typename Vector::Scalar>();
    return v;
}

template <typename Derived>
nlohmann::json vector_to_json(const Eigen::DenseBase<Derived>& v)
{
    std::vector<typename Derived::Scalar> data(v.derived().data(), v.derived().data() + v.size());
    return {{"data", data}};
}

template <typename Sparse>
nlohmann::json sparse_to_json(const Sparse& m)
{
    std::vector<Eigen::Index> rows, cols;
    std::vector<double> values;
    for (Eigen::Index outer = 0; outer < m.outerSize(); ++outer)
        for (typename Sparse::InnerIterator it(m, outer); it; ++it) {
            rows.push_back(it.row());
            cols.push_back(it.col());
            values.push_back(it.value());
        }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"row", rows}, {"col", cols}, {"value", values}};
}

template <typename Sparse>
Sparse sparse_from_json(const nlohmann::json& j)
{
    std::vector<Eigen::Triplet<double>> t;
    const auto& r = j.at("row");
    const auto& c = j.at("col");
    const auto& v = j.at("value");
    t.reserve(r.size());
    for (std::size_t k = 0; k < r.size(); ++k)
        t.emplace_back(r[k].get<Eigen::Index>(), c[k].get<Eigen::Index>(), v[k].get<double>());
    Sparse m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

} // namespace blendrec::detail
