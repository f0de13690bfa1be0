#pragma once
// Latent code spaces: stimulus code tables, a PCA codec over pixel vectors,
// and attribute-vector arithmetic.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ldec/types.hpp"

namespace ldec {

// One latent code per stimulus. Ids are unique and codes are finite.
class LatentTable {
 public:
  LatentTable() = default;
  LatentTable(std::vector<std::string> ids, Matrix codes);

  const std::vector<std::string>& ids() const { return ids_; }
  const Matrix& codes() const { return codes_; }
  Index size() const { return codes_.rows(); }
  Index n_dims() const { return codes_.cols(); }

  std::optional<Index> find(std::string_view id) const;
  Index index_of(std::string_view id) const;
  Vector row(Index i) const { return codes_.row(i).transpose(); }
  Vector code(std::string_view id) const { return row(index_of(id)); }

  // Rows for the given ids, in that order.
  LatentTable select(std::span<const std::string> ids) const;

 private:
  std::vector<std::string> ids_;
  Matrix codes_;
  std::unordered_map<std::string, Index> index_;
};

LatentTable load_latent_table(const std::filesystem::path& matrix_path, const std::filesystem::path& ids_path);
// Ids go to the ".ids" sidecar next to matrix_path.
LatentTable load_latent_table(const std::filesystem::path& matrix_path);
void save_latent_table(const std::filesystem::path& matrix_path, const LatentTable& table);

struct PcaCodec {
  Vector mean;                 // n_pixels
  Matrix components;           // n_components x n_pixels, orthonormal rows
  Vector explained_variance;   // n_components, nonincreasing
  double total_variance = 0.0; // trace of the sample covariance

  Index n_components() const { return components.rows(); }
  Index n_pixels() const { return components.cols(); }
  Vector explained_fraction() const { return explained_variance / total_variance; }
};

// Principal axes from the SVD of mean-centred data. Each component is signed
// so its largest-magnitude entry (lowest index on ties) is positive.
PcaCodec pca_fit(const Matrix& data, Index n_components);

// ids may be empty, in which case rows are named "img0", "img1", ...
LatentTable pca_encode(const PcaCodec& codec, const Matrix& images, std::vector<std::string> ids = {});
Matrix pca_decode(const PcaCodec& codec, const LatentTable& codes);
Matrix pca_decode(const PcaCodec& codec, const Matrix& codes);

void save_pca_codec(const std::filesystem::path& dir, const PcaCodec& codec);
PcaCodec load_pca_codec(const std::filesystem::path& dir);

struct AttributeVector {
  std::string name;
  Vector vector;
  Index n_with = 0;
  Index n_without = 0;
};

// Mean code of the labelled-present set minus mean code of the labelled-absent set.
AttributeVector attribute_vector(const LatentTable& with_label, const LatentTable& without_label, std::string name);

Vector apply_attribute(const Vector& code, const AttributeVector& attr, double scale);

}  // namespace ldec
