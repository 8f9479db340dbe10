// Copyright 2026 The qpem authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <vector>

#include "qpem/pauli.hpp"

// Superoperators on k qubits are represented as real 4^k x 4^k matrices in
// the orthonormal Pauli basis sigma_a = P_a / sqrt(2^k) (PTM form):
//   S_ab = (1/2^k) Tr(P_a S(P_b)).
// Hermiticity-preserving maps are real in this basis; unitary conjugation is
// orthogonal; Pauli channels are diagonal with entries lambda_a.

namespace qpem {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using cx = std::complex<double>;

/// Dense 2^k x 2^k matrix of a k-qubit Pauli (qubit 0 = least significant bit).
CMat pauli_matrix(const PauliString& p);

/// Dense matrix of a k-qubit operator expanded on given qubits of a larger
/// register ordering; `qubits` lists which register bit each local qubit maps
/// to, for building unions in lightcone propagation.
CMat embed_operator(const CMat& op, const std::vector<std::size_t>& op_qubits,
                    const std::vector<std::size_t>& all_qubits);

/// PTM of conjugation by a unitary, rho -> U rho U^dag.
Mat ptm_of_unitary(const CMat& u);

/// PTM of the map rho -> A rho B (complex in general).
CMat ptm_of_sandwich(const CMat& a, const CMat& b);

/// Diagonal of the PTM of rho -> P rho P (entries +-1).
Vec pauli_conj_diag(std::size_t k, const PauliString& p);

/// PTM generator of the coherent part -i[H, .] for H = sum_c coeff_c P_c.
Mat hamiltonian_generator_ptm(std::size_t k,
                              const std::map<PauliString, double>& h_terms);

/// Diagonal PTM generator of sum_P gamma_P (P.P - I): entry a is
/// -2 sum_{P: <a,P> = 1} gamma_P.
Vec pauli_generator_diag(std::size_t k,
                         const std::map<PauliString, double>& gamma);

/// Matrix exponential (scaling and squaring via Eigen).
Mat expm(const Mat& m);
/// Principal matrix logarithm of a real PTM close to identity.
Mat logm(const Mat& m);

/// Entanglement fidelity of the channel S (PTM, k qubits) to the identity:
/// F = Tr(S) / 4^k. For a Pauli channel this equals p_I.
double entanglement_fidelity_ptm(const Mat& s);

/// Frobenius inner product <A,B> = Tr(A^T B) / 4^k on k-qubit PTMs.
double ptm_inner(const Mat& a, const Mat& b);
/// Normalized Frobenius norm sqrt(<A,A>).
double ptm_norm(const Mat& a);

/// Lindblad dissipator PTM generator for jump operator L (on k qubits):
/// rho -> L rho L^dag - (1/2){L^dag L, rho}.
Mat dissipator_ptm(const CMat& l);

/// Single-qubit gate matrices.
CMat rz_matrix(double theta);
CMat rx_matrix(double theta);
CMat ry_matrix(double theta);
CMat sx_matrix();  // sqrt(X)
CMat sqrt_pauli_matrix(Pauli p);

/// Two-qubit gate matrices (on 4-dim space, qubit 0 = LSB).
CMat cz_matrix();
CMat cx_matrix();  // control = qubit 0
CMat rzz_matrix(double alpha);                           // exp(-i alpha ZZ/2)
CMat kak_matrix(double ax, double ay, double az);        // exp(-i(ax XX + ay YY + az ZZ)/2)

}  // namespace qpem
