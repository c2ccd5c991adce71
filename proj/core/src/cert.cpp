#include "rigidity/cert.hpp"

#include <sstream>

namespace rigidity {

std::string VerificationReport::to_text() const {
  std::ostringstream o;
  o << "result: " << (ok() ? "ok" : "FAILED") << "\n";
  if (!dimensions_ok) {
    o << "dimensions: mismatch (" << first_mismatch << ")\n";
    return o.str();
  }
  o << "reconstruction: " << (reconstruction_ok ? "exact" : "mismatch at " + first_mismatch) << "\n";
  o << "structural_rank: " << structural_rank << "\n";
  if (exact_rank_computed) o << "exact_rank: " << exact_rank << "\n";
  else o << "exact_rank: not computed\n";
  o << "claimed_rank: " << claimed_rank << (rank_ok ? "" : " (violated)") << "\n";
  o << "z_row_nnz: " << z_nnz.max_row << "\n";
  o << "z_col_nnz: " << z_nnz.max_col << "\n";
  o << "claimed_sparsity: " << claimed_sparsity << (sparsity_ok ? "" : " (violated)") << "\n";
  return o.str();
}

}  // namespace rigidity
