#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qfa/errors.hpp"
#include "qfa/rational.hpp"

namespace qfa {

/// Whether a port carries an annihilation-flavored mode (b) or a
/// creation-flavored one (b†). Flavor decides the sign with which an input
/// enters the scattering identities and is immutable after construction.
enum class PortFlavor { annihilation, creation };

struct Port {
    std::string name;
    PortFlavor flavor = PortFlavor::annihilation;

    bool is_creation() const { return flavor == PortFlavor::creation; }
    std::string label() const { return is_creation() ? name + "\xE2\x80\xA0" : name; }

    friend bool operator==(const Port& a, const Port& b) {
        return a.name == b.name && a.flavor == b.flavor;
    }
};

inline Port ann(std::string name) { return {std::move(name), PortFlavor::annihilation}; }
inline Port cre(std::string name) { return {std::move(name), PortFlavor::creation}; }

/// Matrix of rational functions in s mapping labeled input ports to labeled
/// output ports. The universal system representation of this library: plants,
/// controllers and closed loops are all stored this way.
class RationalMatrix {
public:
    RationalMatrix(std::vector<std::vector<RationalFunction>> entries,
                   std::vector<Port> row_ports, std::vector<Port> col_ports)
        : entries_(std::move(entries)),
          row_ports_(std::move(row_ports)),
          col_ports_(std::move(col_ports)) {
        if (entries_.empty() || entries_.size() != row_ports_.size())
            throw ParameterError("RationalMatrix: row count does not match row port labels");
        for (const auto& row : entries_)
            if (row.size() != col_ports_.size())
                throw ParameterError("RationalMatrix: column count does not match column port labels");
    }

    std::size_t rows() const { return entries_.size(); }
    std::size_t cols() const { return col_ports_.size(); }
    const RationalFunction& at(std::size_t i, std::size_t j) const { return entries_[i][j]; }
    const std::vector<Port>& row_ports() const { return row_ports_; }
    const std::vector<Port>& col_ports() const { return col_ports_; }

    /// Dense numeric value at a fixed s.
    Eigen::MatrixXcd eval_at(Complex s) const {
        Eigen::MatrixXcd m(rows(), cols());
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j = 0; j < cols(); ++j) m(i, j) = entries_[i][j].eval(s);
        return m;
    }

private:
    std::vector<std::vector<RationalFunction>> entries_;
    std::vector<Port> row_ports_;
    std::vector<Port> col_ports_;
};

}  // namespace qfa
