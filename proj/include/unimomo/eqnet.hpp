//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_EQNET_HPP_
#define UNIMOMO_EQNET_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "unimomo/blockgraph.hpp"
#include "unimomo/params.hpp"
#include "unimomo/random.hpp"
#include "unimomo/tape.hpp"
#include "unimomo/tensor.hpp"

namespace unimomo {

// Shared E(3)-equivariant transformer backbone. Nodes carry invariant scalar
// features plus a bank of per-node 3-vector channels; all learned maps touch
// only invariant quantities (scalars, distance RBFs, vector inner products),
// and vector channels are updated by bias-free linear combinations of existing
// vectors and normalized relative positions, so scalars are invariant and
// vectors equivariant under any rigid motion (including reflections) of the
// input coordinates.
struct EqNetConfig {
  std::size_t hidden_size = 512;
  std::size_t n_layers = 6;
  std::size_t n_heads = 8;
  std::size_t n_rbf = 64;
  double cutoff = 10.0;  // Angstroms for atom graphs; normalized units for
                         // latent graphs.
  std::size_t edge_embed_size = 64;
  std::size_t vector_channels = 8;

  // Throws ConfigError on non-positive sizes, n_rbf < 2, or hidden_size not
  // divisible by n_heads.
  void validate() const;
};

// Gaussian radial basis embedding of a distance: component k is
// exp(-(d - c_k)^2 / (2 g^2)) with centers c_k evenly spaced on [0, cutoff]
// and width g equal to the center spacing.
std::vector<double> rbf_embed(double distance, const EqNetConfig& cfg);

// Edge type ids. Spatial (non-bonded) edges are typed by which contexts the
// two endpoints belong to; chemical bonds keep their bond order as the type.
inline constexpr int kEdgeTypeSpatial = 0;      // both endpoints in context 0
inline constexpr int kEdgeTypeCross = 4;        // endpoints in different contexts
inline constexpr int kEdgeTypeSpatialAlt = 5;   // both endpoints in context 1
inline constexpr std::size_t kNumEdgeTypes = 6; // 0, bond orders 1-3, 4, 5
inline constexpr std::size_t kNeighborCap = 16;

// Directed edge list; both directions of every neighbor pair are present.
struct EdgeList {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<int> type;
  std::size_t size() const { return src.size(); }
};

struct BondSpec {
  std::size_t i = 0, j = 0;
  int order = 1;
};

// Builds the neighbor graph: every node connects to its k nearest neighbors
// within the cutoff (ties broken by node index), the pair set is symmetrized,
// and bonded pairs are always included regardless of distance. Bond pairs are
// typed by bond order; all other pairs by the endpoint contexts (see above).
// context[i] must be 0 or 1 (e.g. binder vs. site).
EdgeList build_edges(const std::vector<Vec3>& coords,
                     const std::vector<int>& context,
                     const std::vector<BondSpec>& bonds, double cutoff,
                     std::size_t k = kNeighborCap);

// Plain-data node features for inference-style calls.
struct EqFeatures {
  Tensor scalars;            // (n_nodes, hidden_size)
  Tensor vectors;            // (3*n_nodes, vector_channels); node i owns rows
                             // 3i..3i+2 holding the x/y/z components
  std::vector<Vec3> coords;  // one per node
};

// Row-index helpers for the (3*n_nodes, channels) vector layout.
// rows3({a,b}) = {3a,3a+1,3a+2,3b,3b+1,3b+2}.
std::vector<std::size_t> rows3(const std::vector<std::size_t>& nodes);
// replicate3(n) = {0,0,0,1,1,1,...,n-1,n-1,n-1}; serves both as segment ids
// (3n rows -> n groups) and as gather indices (n rows -> 3n rows).
std::vector<std::size_t> replicate3(std::size_t n);

class EqNet {
 public:
  // Registers all parameters under "<prefix>." in the store.
  EqNet(ParamStore& store, const std::string& prefix, const EqNetConfig& cfg,
        RandomStream& rng);

  struct TapeOut {
    Value scalars;  // (n_nodes, hidden_size)
    Value vectors;  // (3*n_nodes, vector_channels)
  };

  // Differentiable forward pass on an existing tape. `scalars` and `vectors`
  // must already live on `tape` and match the config dimensions; coords are
  // consumed only through relative positions. Throws NumericError naming the
  // first node with non-finite scalars, vectors, or coordinates.
  TapeOut run(Tape& tape, Value scalars, Value vectors,
              const std::vector<Vec3>& coords, const EdgeList& edges) const;

  // Convenience wrapper: runs on a private tape and copies the outputs.
  EqFeatures forward(const EqFeatures& in, const EdgeList& edges) const;

  const EqNetConfig& config() const { return cfg_; }

 private:
  struct LayerParams {
    Param* ln1_gamma;
    Param* ln1_beta;
    Param* wq;
    Param* bq;
    Param* wk;
    Param* bk;
    Param* wv;
    Param* bv;
    Param* wo;
    Param* bo;
    Param* edge_w;
    Param* edge_b;
    Param* logit_w;
    Param* logit_b;
    Param* gate_w;
    Param* gate_b;
    Param* beta_w;
    Param* beta_b;
    Param* vgate_w;
    Param* vgate_b;
    Param* vmix;  // bias-free channel mixing on the vector path
    Param* ln2_gamma;
    Param* ln2_beta;
    Param* ff_w1;
    Param* ff_b1;
    Param* ff_w2;
    Param* ff_b2;
  };

  EqNetConfig cfg_;
  Param* type_emb_;  // (kNumEdgeTypes, edge_embed_size), shared across layers
  std::vector<LayerParams> layers_;
};

}  // namespace unimomo

#endif  // UNIMOMO_EQNET_HPP_
