#include "hinembed/ann_index.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

#include "binary_io.hpp"

namespace hinembed {

namespace {

constexpr char kIndexMagic[4] = {'H', 'I', 'D', 'X'};
constexpr uint32_t kIndexVersion = 1;

void top_k_sort(std::vector<Candidate>& items, size_t k) {
  const auto cmp = [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  if (items.size() > k) {
    std::partial_sort(items.begin(), items.begin() + std::ptrdiff_t(k), items.end(), cmp);
    items.resize(k);
  } else {
    std::sort(items.begin(), items.end(), cmp);
  }
}

}  // namespace

AnnIndex AnnIndex::build(const Matrix& vectors, const AnnParams& params,
                         const std::string& entity_type,
                         std::vector<std::string> external_ids) {
  if (vectors.empty()) throw std::invalid_argument("cannot index an empty vector set");
  if (!external_ids.empty() && external_ids.size() != vectors.rows())
    throw std::invalid_argument("external id count does not match vector count");

  AnnIndex idx;
  idx.entity_type_ = entity_type;
  idx.vectors_ = vectors;
  idx.params_ = params;
  if (external_ids.empty()) {
    idx.external_ids_.reserve(vectors.rows());
    for (size_t i = 0; i < vectors.rows(); ++i) idx.external_ids_.push_back(std::to_string(i));
  } else {
    idx.external_ids_ = std::move(external_ids);
  }

  if (params.mode == AnnParams::Mode::IVF) {
    const uint32_t nlist = std::min<uint32_t>(params.nlist, uint32_t(vectors.rows()));
    if (nlist == 0) throw std::invalid_argument("nlist must be >= 1");
    idx.params_.nlist = nlist;
    idx.params_.nprobe = std::min<uint32_t>(std::max<uint32_t>(params.nprobe, 1), nlist);
    KMeansConfig kc;
    kc.k = nlist;
    kc.seed = params.seed;
    kc.max_iters = params.ivf_train_iters;
    const ClusterModel model = kmeans(vectors, kc);
    idx.centroids_ = model.centroids;
    idx.lists_.assign(nlist, {});
    for (uint32_t i = 0; i < vectors.rows(); ++i)
      idx.lists_[model.target_assignment[i]].push_back(i);
  }
  return idx;
}

int64_t AnnIndex::row_of(const std::string& external_id) const {
  for (size_t i = 0; i < external_ids_.size(); ++i)
    if (external_ids_[i] == external_id) return int64_t(i);
  return -1;
}

CandidateList AnnIndex::query_topk(std::span<const float> query, size_t k) const {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (query.size() != vectors_.cols()) throw std::invalid_argument("query dim mismatch");

  CandidateList out;
  if (params_.mode == AnnParams::Mode::Exact) {
    out.items.reserve(vectors_.rows());
    for (uint32_t i = 0; i < vectors_.rows(); ++i)
      out.items.push_back({i, dot(vectors_.row(i), query), -1});
    top_k_sort(out.items, k);
    return out;
  }

  // Probe the nprobe cells whose centroids score highest against the query.
  std::vector<Candidate> cells;
  cells.reserve(centroids_.rows());
  for (uint32_t c = 0; c < centroids_.rows(); ++c)
    cells.push_back({c, dot(centroids_.row(c), query), -1});
  top_k_sort(cells, params_.nprobe);

  for (const Candidate& cell : cells)
    for (uint32_t id : lists_[cell.id])
      out.items.push_back({id, dot(vectors_.row(id), query), -1});
  top_k_sort(out.items, k);
  return out;
}

CandidateList multi_query(const AnnIndex& index, const MixtureRepresentation& mixture,
                          size_t k) {
  const size_t m = mixture.components.size();
  if (m == 0) throw std::invalid_argument("empty mixture");
  if (k < m) throw std::invalid_argument("k must be >= number of mixture components");

  double wsum = 0.0;
  for (const auto& c : mixture.components) wsum += c.weight;
  if (!(wsum > 0.0)) throw std::invalid_argument("mixture weights must be positive");

  // Largest-remainder allocation of k over components.
  std::vector<size_t> quota(m, 0);
  std::vector<std::pair<double, size_t>> remainders(m);
  size_t assigned = 0;
  for (size_t i = 0; i < m; ++i) {
    const double share = mixture.components[i].weight / wsum * double(k);
    quota[i] = size_t(share);
    assigned += quota[i];
    remainders[i] = {share - double(quota[i]), i};
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (size_t r = 0; r < k - assigned; ++r) ++quota[remainders[r % m].second];

  std::unordered_map<uint32_t, Candidate> best;
  for (size_t i = 0; i < m; ++i) {
    if (quota[i] == 0) continue;
    const auto& comp = mixture.components[i];
    if (comp.vec.size() != index.dim())
      throw std::invalid_argument("mixture component dim mismatch");
    CandidateList part = index.query_topk(
        std::span<const float>(comp.vec.data(), comp.vec.size()), quota[i]);
    for (Candidate& cand : part.items) {
      cand.component = int32_t(i);
      auto it = best.find(cand.id);
      if (it == best.end() || cand.score > it->second.score) best[cand.id] = cand;
    }
  }

  CandidateList out;
  out.items.reserve(best.size());
  for (const auto& [id, cand] : best) out.items.push_back(cand);
  std::sort(out.items.begin(), out.items.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return out;
}

void AnnIndex::save(const std::string& path) const {
  std::string out;
  out.append(kIndexMagic, 4);
  bio::put_u32(out, kIndexVersion);
  out.push_back(params_.mode == AnnParams::Mode::Exact ? char(0) : char(1));
  bio::put_u32(out, uint32_t(vectors_.cols()));
  bio::put_u64(out, vectors_.rows());
  bio::put_str(out, entity_type_);
  for (const auto& id : external_ids_) bio::put_str(out, id);
  for (size_t r = 0; r < vectors_.rows(); ++r)
    for (float v : vectors_.row(r)) bio::put_f32(out, v);
  if (params_.mode == AnnParams::Mode::IVF) {
    bio::put_u32(out, params_.nlist);
    bio::put_u32(out, params_.nprobe);
    for (size_t c = 0; c < centroids_.rows(); ++c)
      for (float v : centroids_.row(c)) bio::put_f32(out, v);
    for (const auto& list : lists_) {
      bio::put_u64(out, list.size());
      for (uint32_t id : list) bio::put_u32(out, id);
    }
  }
  bio::write_file(path, out);
}

AnnIndex AnnIndex::load(const std::string& path) {
  const std::string bytes = bio::read_file(path);
  bio::Reader r(bytes, path);
  const std::string magic = r.bytes(4);
  if (std::memcmp(magic.data(), kIndexMagic, 4) != 0)
    throw std::runtime_error("bad magic in index file: " + path);
  if (r.u32() != kIndexVersion)
    throw std::runtime_error("unsupported index version: " + path);

  AnnIndex idx;
  const uint8_t mode = uint8_t(r.bytes(1)[0]);
  idx.params_.mode = mode == 0 ? AnnParams::Mode::Exact : AnnParams::Mode::IVF;
  const uint32_t dim = r.u32();
  const uint64_t n = r.u64();
  idx.entity_type_ = r.str();
  idx.external_ids_.reserve(n);
  for (uint64_t i = 0; i < n; ++i) idx.external_ids_.push_back(r.str());
  idx.vectors_ = Matrix(n, dim);
  for (size_t row = 0; row < n; ++row)
    for (float& v : idx.vectors_.row(row)) v = r.f32();
  if (idx.params_.mode == AnnParams::Mode::IVF) {
    idx.params_.nlist = r.u32();
    idx.params_.nprobe = r.u32();
    idx.centroids_ = Matrix(idx.params_.nlist, dim);
    for (size_t c = 0; c < idx.centroids_.rows(); ++c)
      for (float& v : idx.centroids_.row(c)) v = r.f32();
    idx.lists_.resize(idx.params_.nlist);
    for (auto& list : idx.lists_) {
      list.resize(r.u64());
      for (auto& id : list) {
        id = r.u32();
        if (id >= n) throw std::runtime_error("corrupt inverted list in index file: " + path);
      }
    }
  }
  r.expect_end("index");
  return idx;
}

}  // namespace hinembed
