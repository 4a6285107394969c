// Prints the 2-site singlet reference values used by the frozen tests,
// computed with the brute-force 4x4 oracle only.
#include <cstdio>

#include "brute_force.hpp"

int main() {
    const auto h = oracle::hamiltonian(2, 1.0, 0.0, false);
    const auto j = oracle::probe({2.0, 0.0}, 2);
    oracle::Vec psi = oracle::Vec::Zero(4);
    psi[1] = 1.0 / std::sqrt(2.0);   // site 0 up, site 1 down
    psi[2] = -1.0 / std::sqrt(2.0);  // site 0 down, site 1 up
    for (double t : {0.0, 0.5, 1.0, 2.0, 3.0, 7.5, 13.0, 20.0}) {
        std::printf("t=%-5g F_M=%.17g cos=%.17g F_S=%.17g cos/2=%.17g\n", t, oracle::f_m(psi, h, j, t), std::cos(t),
                    oracle::f_s(psi, h, j, t), std::cos(t) / 2);
    }
}
