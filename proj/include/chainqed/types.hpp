#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace chainqed
{
    using Real = double;
    using Complex = std::complex<Real>;

    template <typename Scalar>
    using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
    template <typename Scalar>
    using Tensor3 = Eigen::Matrix<std::complex<Scalar>, 3, 3>;

    using Vector3d = Vector3<Real>;
    using VectorXr = Eigen::VectorXd;
    using VectorXc = Eigen::VectorXcd;
    using MatrixXr = Eigen::MatrixXd;
    using MatrixXc = Eigen::MatrixXcd;
    using SparseMatrixC = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
    using SparseMatrixR = Eigen::SparseMatrix<Real, Eigen::RowMajor>;

    /// Resonant wavenumber in units of 1/lambda_eg.
    template <typename Scalar = Real>
    inline constexpr Scalar k0 = Scalar(2) * std::numbers::pi_v<Scalar>;

    inline constexpr Complex I{0.0, 1.0};

    enum class ErrorKind
    {
        SelfInteraction,
        InvalidGeometry,
        Diagonalization,
        Domain,
        OutOfRange,
        DegenerateAnsatz,
        DimensionMismatch,
        BasisMismatch,
        Config,
        Stability,
        ZeroField,
        Inconclusive,
        Io,
    };

    std::string_view to_string(ErrorKind kind);

    class Error : public std::runtime_error
    {
    public:
        Error(ErrorKind kind, const std::string& what)
            : std::runtime_error(what), m_kind(kind) {}

        ErrorKind kind() const noexcept { return m_kind; }

    private:
        ErrorKind m_kind;
    };

    [[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
    {
        throw Error(kind, what);
    }
}
