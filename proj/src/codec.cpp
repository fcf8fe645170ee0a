#include "marc/codec.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>

namespace marc {

GdfeFilters compute_gdfe(const Matrix& H) {
  if (!H.allFinite()) throw NumericalError("compute_gdfe: non-finite channel");
  const Eigen::Index m = H.cols();
  Matrix gram = Matrix::Identity(m, m);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(H.transpose());
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("compute_gdfe: Cholesky factorization failed");
  GdfeFilters f;
  f.B = llt.matrixU();
  f.F = llt.matrixL().solve(H.transpose());
  return f;
}

Vector encode(const NestedLatticeCode& code, const IntVector& z_msg, const Vector& u) {
  if (u.size() != code.dimension()) throw ArgumentError("encode: dither dimension mismatch");
  return code.shaping().reduce(index_to_coset_leader(code, z_msg) - u);
}

TransmitState make_transmit_state(const NestedLatticeCode& code, const IntVector& z_msg, Vector u) {
  TransmitState s;
  s.leader = index_to_coset_leader(code, z_msg);
  s.x = code.shaping().reduce(s.leader - u);
  s.u = std::move(u);
  return s;
}

SphereDecodeResult one_stage_search(const Vector& y, const Matrix& G, const GdfeFilters& filters,
                                    const Vector& u, const SphereDecodeOptions& options) {
  const Vector target = filters.F * y + filters.B * u;
  return sphere_decode(filters.B * G, target, options);
}

IntVector one_stage_decode(const Vector& y, const Matrix& G, const GdfeFilters& filters,
                           const Vector& u, const SphereDecodeOptions& options) {
  return one_stage_search(y, G, filters, u, options).z;
}

std::vector<IntVector> messages_from_solution(const RelayMapper& mapper, const IntVector& z) {
  std::vector<IntVector> out;
  Eigen::Index at = 0;
  for (const auto& code : mapper.user_codes()) {
    const std::int64_t tau = code.tau();
    out.push_back(z.segment(at, code.dimension()).unaryExpr([tau](std::int64_t v) {
      return ((v % tau) + tau) % tau;
    }));
    at += code.dimension();
  }
  return out;
}

Vector reconstruct(const RelayMapper& mapper, const std::vector<IntVector>& messages,
                   const Dithers& dithers, bool with_relay) {
  Eigen::Index dim = 0;
  for (const auto& c : mapper.user_codes()) dim += c.dimension();
  if (with_relay) dim += mapper.relay_code().dimension();
  Vector x(dim);
  Eigen::Index at = 0;
  for (int i = 0; i < mapper.users(); ++i) {
    const auto& code = mapper.user_codes()[i];
    x.segment(at, code.dimension()) = encode(code, messages.at(i), dithers.users.at(i));
    at += code.dimension();
  }
  if (with_relay) {
    x.tail(mapper.relay_code().dimension()) =
        encode(mapper.relay_code(), mapper.map_indices(messages), dithers.relay);
  }
  return x;
}

namespace {

struct Layout {
  std::vector<Eigen::Index> offset;  // column offset per transmitter (relay last)
  std::vector<Eigen::Index> size;
};

Layout layout_of(const ReceiverModel& model) {
  Layout l;
  Eigen::Index at = 0;
  for (const auto& c : model.mapper->user_codes()) {
    l.offset.push_back(at);
    l.size.push_back(c.dimension());
    at += c.dimension();
  }
  if (model.relay_present) {
    l.offset.push_back(at);
    l.size.push_back(model.mapper->relay_code().dimension());
    at += model.mapper->relay_code().dimension();
  }
  if (model.H.cols() != at) {
    throw ArgumentError("receiver model: channel has " + std::to_string(model.H.cols()) +
                        " columns, codes need " + std::to_string(at));
  }
  return l;
}

class TreeDecoder {
 public:
  TreeDecoder(const Vector& y, const ReceiverModel& model) : y_(y), model_(model), layout_(layout_of(model)) {
    if (y.size() != model.H.rows()) throw ArgumentError("received vector dimension mismatch");
  }

  // Coset-decodes the residual users given fixed messages for the others.
  DecodeNodeResult decode_node(const std::vector<int>& residual, const std::vector<IntVector>& known,
                               bool& budget_exceeded) {
    const RelayMapper& mapper = *model_.mapper;
    const int K = mapper.users();
    DecodeNodeResult node;
    node.residual_users = residual;

    Vector y_res = y_;
    unsigned mask = 0;
    for (int u : residual) mask |= 1u << u;
    for (int u = 0; u < K; ++u) {
      if (mask & (1u << u)) continue;
      const Vector x_hat = encode(mapper.user_codes()[u], known[u], model_.dithers.users[u]);
      y_res.noalias() -= model_.H.middleCols(layout_.offset[u], layout_.size[u]) * x_hat;
    }

    const GdfeFilters& filters = filters_for(mask, residual);
    const SuperLatticeSection sec = superlattice_section(mapper, residual, known, model_.relay_present);

    Vector u_res(sec.generator.rows());
    Eigen::Index at = 0;
    for (int u : residual) {
      u_res.segment(at, layout_.size[u]) = model_.dithers.users[u];
      at += layout_.size[u];
    }
    if (model_.relay_present) u_res.tail(mapper.relay_code().dimension()) = model_.dithers.relay;

    const Vector target = filters.F * y_res + filters.B * (u_res - sec.offset);
    SphereDecodeResult found;
    try {
      found = sphere_decode(filters.B * sec.generator, target, model_.sphere);
    } catch (const SearchBudgetExceeded&) {
      budget_exceeded = true;
      node.metric = std::numeric_limits<double>::infinity();
      return node;
    }
    at = 0;
    for (int u : residual) {
      const std::int64_t tau = mapper.user_codes()[u].tau();
      node.messages.push_back(found.z.segment(at, layout_.size[u]).unaryExpr([tau](std::int64_t v) {
        return ((v % tau) + tau) % tau;
      }));
      at += layout_.size[u];
    }
    node.metric = found.distance_sq;
    node.ok = true;
    return node;
  }

 private:
  const GdfeFilters& filters_for(unsigned mask, const std::vector<int>& residual) {
    auto it = cache_.find(mask);
    if (it != cache_.end()) return it->second;
    Eigen::Index cols = 0;
    for (int u : residual) cols += layout_.size[u];
    const int K = model_.mapper->users();
    if (model_.relay_present) cols += layout_.size[K];
    Matrix h(model_.H.rows(), cols);
    Eigen::Index at = 0;
    for (int u : residual) {
      h.middleCols(at, layout_.size[u]) = model_.H.middleCols(layout_.offset[u], layout_.size[u]);
      at += layout_.size[u];
    }
    if (model_.relay_present) h.middleCols(at, layout_.size[K]) = model_.H.middleCols(layout_.offset[K], layout_.size[K]);
    return cache_.emplace(mask, compute_gdfe(h)).first->second;
  }

  const Vector& y_;
  const ReceiverModel& model_;
  Layout layout_;
  std::map<unsigned, GdfeFilters> cache_;
};

struct PendingNode {
  int stage;
  int index;
  bool dead;
  std::vector<int> path_users;            // decoded users along the path, in order
  std::vector<IntVector> path_messages;   // indexed by user, filled for path users
};

}  // namespace

DecodeResult decode_messages(const Vector& y, const ReceiverModel& model, DecoderKind kind) {
  if (model.mapper == nullptr) throw ArgumentError("receiver model has no mapper");
  const RelayMapper& mapper = *model.mapper;
  const int K = mapper.users();
  if (K > 16) throw ConfigError("decoding tree supports at most 16 users");
  if (static_cast<int>(model.dithers.users.size()) != K) throw ArgumentError("dither count mismatch");

  TreeDecoder decoder(y, model);
  DecodeResult result;

  std::vector<int> all(K);
  for (int i = 0; i < K; ++i) all[i] = i;

  if (kind == DecoderKind::OneStage) {
    DecodeNodeResult root = decoder.decode_node(all, {}, result.budget_exceeded);
    root.stage = 1;
    root.index = 1;
    if (root.ok) {
      result.messages = root.messages;
      result.chosen_leaf = 0;
    }
    result.nodes.push_back(std::move(root));
    return result;
  }

  // Step A/B: breadth-first over stages; children take the parent's decision
  // for one residual user, in increasing user order. A node whose search failed
  // still spawns its subtree so leaf numbering stays fixed; those leaves carry
  // no candidate.
  std::vector<PendingNode> level{{1, 1, false, {}, std::vector<IntVector>(K)}};
  std::vector<std::vector<IntVector>> candidates;
  for (int stage = 1; stage <= K; ++stage) {
    std::vector<PendingNode> next;
    int child_index = 0;
    for (const PendingNode& pn : level) {
      std::vector<int> residual;
      for (int u = 0; u < K; ++u) {
        if (std::find(pn.path_users.begin(), pn.path_users.end(), u) == pn.path_users.end()) {
          residual.push_back(u);
        }
      }
      DecodeNodeResult node;
      if (!pn.dead) {
        node = decoder.decode_node(residual, pn.path_messages, result.budget_exceeded);
      } else {
        node.residual_users = residual;
        node.metric = std::numeric_limits<double>::infinity();
      }
      node.stage = pn.stage;
      node.index = pn.index;
      if (stage == K) {
        if (node.ok) {
          std::vector<IntVector> full = pn.path_messages;
          full[residual.front()] = node.messages.front();
          candidates.push_back(std::move(full));
        } else {
          candidates.emplace_back();
        }
      } else {
        for (std::size_t r = 0; r < residual.size(); ++r) {
          PendingNode child{stage + 1, ++child_index, !node.ok, pn.path_users, pn.path_messages};
          child.path_users.push_back(residual[r]);
          if (node.ok) child.path_messages[residual[r]] = node.messages[r];
          next.push_back(std::move(child));
        }
      }
      result.nodes.push_back(std::move(node));
    }
    level = std::move(next);
  }

  // Step C: nearest reconstruction wins; ties go to the lowest leaf.
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t leaf = 0; leaf < candidates.size(); ++leaf) {
    double d = std::numeric_limits<double>::infinity();
    if (!candidates[leaf].empty()) {
      const Vector x_hat = reconstruct(mapper, candidates[leaf], model.dithers, model.relay_present);
      d = (y - model.H * x_hat).squaredNorm();
    }
    result.candidate_distances.push_back(d);
    if (d < best) {
      best = d;
      result.chosen_leaf = static_cast<int>(leaf);
    }
  }
  if (result.chosen_leaf >= 0) result.messages = candidates[result.chosen_leaf];
  return result;
}

DecodeResult k_stage_decode(const Vector& y, const ReceiverModel& model) {
  return decode_messages(y, model, DecoderKind::KStage);
}

DecodeResult relay_decode(const Vector& y_relay, const Matrix& H_relay, const RelayMapper& mapper,
                          const Dithers& dithers, DecoderKind kind, const SphereDecodeOptions& sphere) {
  ReceiverModel model;
  model.mapper = &mapper;
  model.H = H_relay;
  model.relay_present = false;
  model.dithers = dithers;
  model.sphere = sphere;
  return decode_messages(y_relay, model, kind);
}

}  // namespace marc
