#include "ldec/latent_codec.hpp"

#include <cmath>

#include "ldec/error.hpp"
#include "ldec/io.hpp"

namespace ldec {

LatentTable::LatentTable(std::vector<std::string> ids, Matrix codes) : ids_(std::move(ids)), codes_(std::move(codes)) {
  if (static_cast<Index>(ids_.size()) != codes_.rows()) {
    throw Error("latent table: count mismatch between " + std::to_string(ids_.size()) + " ids and " +
                std::to_string(codes_.rows()) + " code rows");
  }
  if (!codes_.allFinite()) throw Error("latent table: codes contain non-finite values");
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i].empty()) throw Error("latent table: empty stimulus id at row " + std::to_string(i));
    if (!index_.emplace(ids_[i], static_cast<Index>(i)).second) {
      throw Error("latent table: duplicate stimulus id '" + ids_[i] + "'");
    }
  }
}

std::optional<Index> LatentTable::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index LatentTable::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw Error("latent table: unknown stimulus id '" + std::string(id) + "'");
}

LatentTable LatentTable::select(std::span<const std::string> ids) const {
  Matrix out(static_cast<Index>(ids.size()), n_dims());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Index>(i)) = codes_.row(index_of(ids[i]));
  return LatentTable(std::vector<std::string>(ids.begin(), ids.end()), std::move(out));
}

LatentTable load_latent_table(const std::filesystem::path& matrix_path, const std::filesystem::path& ids_path) {
  return LatentTable(io::read_ids(ids_path), io::read_matrix(matrix_path));
}

LatentTable load_latent_table(const std::filesystem::path& matrix_path) {
  return load_latent_table(matrix_path, io::row_ids_path(matrix_path));
}

void save_latent_table(const std::filesystem::path& matrix_path, const LatentTable& table) {
  io::write_matrix(matrix_path, table.codes());
  io::write_ids(io::row_ids_path(matrix_path), table.ids());
}

PcaCodec pca_fit(const Matrix& data, Index n_components) {
  const Index n = data.rows();
  const Index p = data.cols();
  if (n < 2) throw Error("pca_fit: need at least 2 samples");
  if (n_components < 1 || n_components > std::min(n - 1, p)) {
    throw Error("pca_fit: n_components must lie in [1, " + std::to_string(std::min(n - 1, p)) + "], got " +
                std::to_string(n_components));
  }
  if (!data.allFinite()) throw Error("pca_fit: data contain non-finite values");

  PcaCodec codec;
  codec.mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - codec.mean.transpose();
  const double scale = data.cwiseAbs().maxCoeff();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 1e-14 * std::max(scale, 1.0) * std::sqrt(static_cast<double>(n))) {
    throw Error("pca_fit: zero variance (all rows identical)");
  }
  codec.components = svd.matrixV().leftCols(n_components).transpose();
  for (Index c = 0; c < n_components; ++c) {
    Index pivot = 0;
    double best = -1.0;
    for (Index j = 0; j < p; ++j) {
      const double a = std::abs(codec.components(c, j));
      if (a > best) {
        best = a;
        pivot = j;
      }
    }
    if (codec.components(c, pivot) < 0.0) codec.components.row(c) *= -1.0;
  }
  codec.explained_variance = s.head(n_components).array().square() / static_cast<double>(n - 1);
  codec.total_variance = centered.squaredNorm() / static_cast<double>(n - 1);
  return codec;
}

LatentTable pca_encode(const PcaCodec& codec, const Matrix& images, std::vector<std::string> ids) {
  if (images.cols() != codec.n_pixels()) {
    throw Error("pca_encode: images have " + std::to_string(images.cols()) + " pixels, codec expects " +
                std::to_string(codec.n_pixels()));
  }
  if (ids.empty()) {
    for (Index i = 0; i < images.rows(); ++i) ids.push_back("img" + std::to_string(i));
  }
  Matrix codes = (images.rowwise() - codec.mean.transpose()) * codec.components.transpose();
  return LatentTable(std::move(ids), std::move(codes));
}

Matrix pca_decode(const PcaCodec& codec, const Matrix& codes) {
  if (codes.cols() != codec.n_components()) {
    throw Error("pca_decode: codes have " + std::to_string(codes.cols()) + " dims, codec has " +
                std::to_string(codec.n_components()) + " components");
  }
  return (codes * codec.components).rowwise() + codec.mean.transpose();
}

Matrix pca_decode(const PcaCodec& codec, const LatentTable& codes) { return pca_decode(codec, codes.codes()); }

void save_pca_codec(const std::filesystem::path& dir, const PcaCodec& codec) {
  io::write_matrix(dir / "pca_mean.ldmx", codec.mean.transpose());
  io::write_matrix(dir / "pca_components.ldmx", codec.components);
  Matrix variance(codec.n_components() + 1, 1);
  variance << codec.explained_variance, codec.total_variance;
  io::write_matrix(dir / "pca_variance.ldmx", variance);
}

PcaCodec load_pca_codec(const std::filesystem::path& dir) {
  PcaCodec codec;
  const Matrix mean = io::read_matrix(dir / "pca_mean.ldmx");
  codec.components = io::read_matrix(dir / "pca_components.ldmx");
  const Matrix variance = io::read_matrix(dir / "pca_variance.ldmx");
  if (mean.rows() != 1 || mean.cols() != codec.components.cols() || variance.cols() != 1 ||
      variance.rows() != codec.components.rows() + 1) {
    throw Error("pca codec files in '" + dir.string() + "' have inconsistent shapes");
  }
  codec.mean = mean.row(0).transpose();
  codec.explained_variance = variance.col(0).head(codec.components.rows());
  codec.total_variance = variance(variance.rows() - 1, 0);
  return codec;
}

AttributeVector attribute_vector(const LatentTable& with_label, const LatentTable& without_label, std::string name) {
  if (with_label.size() == 0 || without_label.size() == 0) throw Error("attribute_vector: empty table");
  if (with_label.n_dims() != without_label.n_dims()) throw Error("attribute_vector: tables differ in n_dims");
  AttributeVector attr;
  attr.name = std::move(name);
  attr.vector = with_label.codes().colwise().mean().transpose() - without_label.codes().colwise().mean().transpose();
  attr.n_with = with_label.size();
  attr.n_without = without_label.size();
  return attr;
}

Vector apply_attribute(const Vector& code, const AttributeVector& attr, double scale) {
  if (code.size() != attr.vector.size()) throw Error("apply_attribute: dimension mismatch");
  return code + scale * attr.vector;
}

}  // namespace ldec
