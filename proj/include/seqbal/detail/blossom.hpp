#pragma once

// Maximum-weight general matching in O(n^3), Edmonds' blossom method with
// primal-dual updates. Port of Joris van Rantwijk's reference implementation
// (public domain), restricted to integer weights so every dual update is exact.

#include <algorithm>
#include <cstdint>
#include <vector>

namespace seqbal::detail {

struct WeightedEdge {
  int i;
  int j;
  std::int64_t w;
};

class BlossomMatcher {
 public:
  BlossomMatcher(int nvertex, std::vector<WeightedEdge> edges, bool max_cardinality)
      : n_(nvertex), edges_(std::move(edges)), maxcard_(max_cardinality) {}

  /// Returns mate[v] (vertex index or -1).
  std::vector<int> solve() {
    init();
    run();
    std::vector<int> out(n_, -1);
    for (int v = 0; v < n_; ++v) {
      if (mate_[v] >= 0) out[v] = endpoint(mate_[v]);
    }
    return out;
  }

  // Dual solution, valid after solve(). Vertex duals come first, then blossoms.
  const std::vector<std::int64_t>& duals() const { return dualvar_; }
  const std::vector<int>& blossom_parent() const { return blossomparent_; }

 private:
  int n_;
  std::vector<WeightedEdge> edges_;
  bool maxcard_;

  std::vector<std::vector<int>> neighbend_;
  std::vector<int> mate_, label_, labelend_, inblossom_, blossomparent_, blossombase_, bestedge_;
  std::vector<std::vector<int>> blossomchilds_, blossomendps_, blossombestedges_;
  std::vector<char> has_bestedges_;
  std::vector<int> unusedblossoms_;
  std::vector<std::int64_t> dualvar_;
  std::vector<char> allowedge_;
  std::vector<int> queue_;

  int endpoint(int p) const { return p & 1 ? edges_[p / 2].j : edges_[p / 2].i; }

  std::int64_t slack(int k) const {
    const auto& e = edges_[k];
    return dualvar_[e.i] + dualvar_[e.j] - 2 * e.w;
  }

  void init() {
    const int nedge = static_cast<int>(edges_.size());
    std::int64_t maxweight = 0;
    for (const auto& e : edges_) maxweight = std::max(maxweight, e.w);
    neighbend_.assign(n_, {});
    for (int k = 0; k < nedge; ++k) {
      neighbend_[edges_[k].i].push_back(2 * k + 1);
      neighbend_[edges_[k].j].push_back(2 * k);
    }
    mate_.assign(n_, -1);
    label_.assign(2 * n_, 0);
    labelend_.assign(2 * n_, -1);
    inblossom_.resize(n_);
    for (int v = 0; v < n_; ++v) inblossom_[v] = v;
    blossomparent_.assign(2 * n_, -1);
    blossomchilds_.assign(2 * n_, {});
    blossombase_.assign(2 * n_, -1);
    for (int v = 0; v < n_; ++v) blossombase_[v] = v;
    blossomendps_.assign(2 * n_, {});
    bestedge_.assign(2 * n_, -1);
    blossombestedges_.assign(2 * n_, {});
    has_bestedges_.assign(2 * n_, 0);
    unusedblossoms_.clear();
    for (int b = n_; b < 2 * n_; ++b) unusedblossoms_.push_back(b);
    dualvar_.assign(2 * n_, 0);
    for (int v = 0; v < n_; ++v) dualvar_[v] = maxweight;
    allowedge_.assign(nedge, 0);
    queue_.clear();
  }

  template <class F>
  void for_leaves(int b, F&& f) const {
    if (b < n_) {
      f(b);
      return;
    }
    for (int t : blossomchilds_[b]) for_leaves(t, f);
  }

  void assign_label(int w, int t, int p) {
    while (true) {
      const int b = inblossom_[w];
      label_[w] = label_[b] = t;
      labelend_[w] = labelend_[b] = p;
      bestedge_[w] = bestedge_[b] = -1;
      if (t == 1) {
        for_leaves(b, [&](int v) { queue_.push_back(v); });
        return;
      }
      const int base = blossombase_[b];
      w = endpoint(mate_[base]);
      t = 1;
      p = mate_[base] ^ 1;
    }
  }

  int scan_blossom(int v, int w) {
    std::vector<int> path;
    int base = -1;
    while (v != -1 || w != -1) {
      int b = inblossom_[v];
      if (label_[b] & 4) {
        base = blossombase_[b];
        break;
      }
      path.push_back(b);
      label_[b] = 5;
      if (labelend_[b] == -1) {
        v = -1;
      } else {
        v = endpoint(labelend_[b]);
        b = inblossom_[v];
        v = endpoint(labelend_[b]);
      }
      if (w != -1) std::swap(v, w);
    }
    for (int b : path) label_[b] = 1;
    return base;
  }

  void add_blossom(int base, int k) {
    int v = edges_[k].i;
    int w = edges_[k].j;
    const int bb = inblossom_[base];
    int bv = inblossom_[v];
    int bw = inblossom_[w];
    const int b = unusedblossoms_.back();
    unusedblossoms_.pop_back();
    blossombase_[b] = base;
    blossomparent_[b] = -1;
    blossomparent_[bb] = b;
    auto& path = blossomchilds_[b];
    auto& endps = blossomendps_[b];
    path.clear();
    endps.clear();
    while (bv != bb) {
      blossomparent_[bv] = b;
      path.push_back(bv);
      endps.push_back(labelend_[bv]);
      v = endpoint(labelend_[bv]);
      bv = inblossom_[v];
    }
    path.push_back(bb);
    std::reverse(path.begin(), path.end());
    std::reverse(endps.begin(), endps.end());
    endps.push_back(2 * k);
    while (bw != bb) {
      blossomparent_[bw] = b;
      path.push_back(bw);
      endps.push_back(labelend_[bw] ^ 1);
      w = endpoint(labelend_[bw]);
      bw = inblossom_[w];
    }
    label_[b] = 1;
    labelend_[b] = labelend_[bb];
    dualvar_[b] = 0;
    for_leaves(b, [&](int leaf) {
      if (label_[inblossom_[leaf]] == 2) queue_.push_back(leaf);
      inblossom_[leaf] = b;
    });

    std::vector<int> bestedgeto(2 * n_, -1);
    auto consider = [&](int kk) {
      int i = edges_[kk].i;
      int j = edges_[kk].j;
      if (inblossom_[j] == b) std::swap(i, j);
      const int bj = inblossom_[j];
      if (bj != b && label_[bj] == 1 && (bestedgeto[bj] == -1 || slack(kk) < slack(bestedgeto[bj]))) {
        bestedgeto[bj] = kk;
      }
    };
    for (int child : path) {
      if (!has_bestedges_[child]) {
        for_leaves(child, [&](int leaf) {
          for (int p : neighbend_[leaf]) consider(p / 2);
        });
      } else {
        for (int kk : blossombestedges_[child]) consider(kk);
      }
      blossombestedges_[child].clear();
      has_bestedges_[child] = 0;
      bestedge_[child] = -1;
    }
    auto& best = blossombestedges_[b];
    best.clear();
    for (int kk : bestedgeto) {
      if (kk != -1) best.push_back(kk);
    }
    has_bestedges_[b] = 1;
    bestedge_[b] = -1;
    for (int kk : best) {
      if (bestedge_[b] == -1 || slack(kk) < slack(bestedge_[b])) bestedge_[b] = kk;
    }
  }

  static int index_of(const std::vector<int>& xs, int x) {
    return static_cast<int>(std::find(xs.begin(), xs.end(), x) - xs.begin());
  }

  // Python-style indexing for negative positions.
  static int at(const std::vector<int>& xs, int j) {
    return xs[j < 0 ? j + static_cast<int>(xs.size()) : j];
  }

  void expand_blossom(int b, bool endstage) {
    for (int s : blossomchilds_[b]) {
      blossomparent_[s] = -1;
      if (s < n_) {
        inblossom_[s] = s;
      } else if (endstage && dualvar_[s] == 0) {
        expand_blossom(s, endstage);
      } else {
        for_leaves(s, [&](int v) { inblossom_[v] = s; });
      }
    }
    if (!endstage && label_[b] == 2) {
      const auto& childs = blossomchilds_[b];
      const auto& endps = blossomendps_[b];
      const int entrychild = inblossom_[endpoint(labelend_[b] ^ 1)];
      int j = index_of(childs, entrychild);
      int jstep, endptrick;
      if (j & 1) {
        j -= static_cast<int>(childs.size());
        jstep = 1;
        endptrick = 0;
      } else {
        jstep = -1;
        endptrick = 1;
      }
      int p = labelend_[b];
      while (j != 0) {
        label_[endpoint(p ^ 1)] = 0;
        label_[endpoint(at(endps, j - endptrick) ^ endptrick ^ 1)] = 0;
        assign_label(endpoint(p ^ 1), 2, p);
        allowedge_[at(endps, j - endptrick) / 2] = 1;
        j += jstep;
        p = at(endps, j - endptrick) ^ endptrick;
        allowedge_[p / 2] = 1;
        j += jstep;
      }
      int bv = at(childs, j);
      label_[endpoint(p ^ 1)] = label_[bv] = 2;
      labelend_[endpoint(p ^ 1)] = labelend_[bv] = p;
      bestedge_[bv] = -1;
      j += jstep;
      while (at(childs, j) != entrychild) {
        bv = at(childs, j);
        if (label_[bv] == 1) {
          j += jstep;
          continue;
        }
        int found = -1;
        for_leaves(bv, [&](int v) {
          if (found == -1 && label_[v] != 0) found = v;
        });
        if (found != -1) {
          label_[found] = 0;
          label_[endpoint(mate_[blossombase_[bv]])] = 0;
          assign_label(found, 2, labelend_[found]);
        }
        j += jstep;
      }
    }
    label_[b] = labelend_[b] = -1;
    blossomchilds_[b].clear();
    blossomendps_[b].clear();
    blossombase_[b] = -1;
    blossombestedges_[b].clear();
    has_bestedges_[b] = 0;
    bestedge_[b] = -1;
    unusedblossoms_.push_back(b);
  }

  void augment_blossom(int b, int v) {
    int t = v;
    while (blossomparent_[t] != b) t = blossomparent_[t];
    if (t >= n_) augment_blossom(t, v);
    auto& childs = blossomchilds_[b];
    auto& endps = blossomendps_[b];
    const int i = index_of(childs, t);
    int j = i;
    int jstep, endptrick;
    if (i & 1) {
      j -= static_cast<int>(childs.size());
      jstep = 1;
      endptrick = 0;
    } else {
      jstep = -1;
      endptrick = 1;
    }
    while (j != 0) {
      j += jstep;
      t = at(childs, j);
      const int p = at(endps, j - endptrick) ^ endptrick;
      if (t >= n_) augment_blossom(t, endpoint(p));
      j += jstep;
      t = at(childs, j);
      if (t >= n_) augment_blossom(t, endpoint(p ^ 1));
      mate_[endpoint(p)] = p ^ 1;
      mate_[endpoint(p ^ 1)] = p;
    }
    std::rotate(childs.begin(), childs.begin() + i, childs.end());
    std::rotate(endps.begin(), endps.begin() + i, endps.end());
    blossombase_[b] = blossombase_[childs[0]];
  }

  void augment_matching(int k) {
    const int v = edges_[k].i;
    const int w = edges_[k].j;
    const int starts[2][2] = {{v, 2 * k + 1}, {w, 2 * k}};
    for (const auto& sp : starts) {
      int s = sp[0];
      int p = sp[1];
      while (true) {
        const int bs = inblossom_[s];
        if (bs >= n_) augment_blossom(bs, s);
        mate_[s] = p;
        if (labelend_[bs] == -1) break;
        const int t = endpoint(labelend_[bs]);
        const int bt = inblossom_[t];
        s = endpoint(labelend_[bt]);
        const int j = endpoint(labelend_[bt] ^ 1);
        if (bt >= n_) augment_blossom(bt, j);
        mate_[j] = labelend_[bt];
        p = labelend_[bt] ^ 1;
      }
    }
  }

  void run() {
    const int nedge = static_cast<int>(edges_.size());
    for (int stage = 0; stage < n_; ++stage) {
      std::fill(label_.begin(), label_.end(), 0);
      std::fill(bestedge_.begin(), bestedge_.end(), -1);
      for (int b = n_; b < 2 * n_; ++b) {
        blossombestedges_[b].clear();
        has_bestedges_[b] = 0;
      }
      std::fill(allowedge_.begin(), allowedge_.end(), 0);
      queue_.clear();
      for (int v = 0; v < n_; ++v) {
        if (mate_[v] == -1 && label_[inblossom_[v]] == 0) assign_label(v, 1, -1);
      }
      bool augmented = false;
      while (true) {
        while (!queue_.empty() && !augmented) {
          const int v = queue_.back();
          queue_.pop_back();
          for (int p : neighbend_[v]) {
            const int k = p / 2;
            const int w = endpoint(p);
            if (inblossom_[v] == inblossom_[w]) continue;
            std::int64_t kslack = 0;
            if (!allowedge_[k]) {
              kslack = slack(k);
              if (kslack <= 0) allowedge_[k] = 1;
            }
            if (allowedge_[k]) {
              if (label_[inblossom_[w]] == 0) {
                assign_label(w, 2, p ^ 1);
              } else if (label_[inblossom_[w]] == 1) {
                const int base = scan_blossom(v, w);
                if (base >= 0) {
                  add_blossom(base, k);
                } else {
                  augment_matching(k);
                  augmented = true;
                  break;
                }
              } else if (label_[w] == 0) {
                label_[w] = 2;
                labelend_[w] = p ^ 1;
              }
            } else if (label_[inblossom_[w]] == 1) {
              const int b = inblossom_[v];
              if (bestedge_[b] == -1 || kslack < slack(bestedge_[b])) bestedge_[b] = k;
            } else if (label_[w] == 0) {
              if (bestedge_[w] == -1 || kslack < slack(bestedge_[w])) bestedge_[w] = k;
            }
          }
        }
        if (augmented) break;

        int deltatype = -1;
        std::int64_t delta = 0;
        int deltaedge = -1;
        int deltablossom = -1;
        if (!maxcard_) {
          deltatype = 1;
          delta = *std::min_element(dualvar_.begin(), dualvar_.begin() + n_);
        }
        for (int v = 0; v < n_; ++v) {
          if (label_[inblossom_[v]] == 0 && bestedge_[v] != -1) {
            const std::int64_t d = slack(bestedge_[v]);
            if (deltatype == -1 || d < delta) {
              delta = d;
              deltatype = 2;
              deltaedge = bestedge_[v];
            }
          }
        }
        for (int b = 0; b < 2 * n_; ++b) {
          if (blossomparent_[b] == -1 && label_[b] == 1 && bestedge_[b] != -1) {
            const std::int64_t d = slack(bestedge_[b]) / 2;
            if (deltatype == -1 || d < delta) {
              delta = d;
              deltatype = 3;
              deltaedge = bestedge_[b];
            }
          }
        }
        for (int b = n_; b < 2 * n_; ++b) {
          if (blossombase_[b] >= 0 && blossomparent_[b] == -1 && label_[b] == 2 &&
              (deltatype == -1 || dualvar_[b] < delta)) {
            delta = dualvar_[b];
            deltatype = 4;
            deltablossom = b;
          }
        }
        if (deltatype == -1) {
          deltatype = 1;
          delta = std::max<std::int64_t>(0, *std::min_element(dualvar_.begin(), dualvar_.begin() + n_));
        }

        for (int v = 0; v < n_; ++v) {
          const int l = label_[inblossom_[v]];
          if (l == 1) {
            dualvar_[v] -= delta;
          } else if (l == 2) {
            dualvar_[v] += delta;
          }
        }
        for (int b = n_; b < 2 * n_; ++b) {
          if (blossombase_[b] >= 0 && blossomparent_[b] == -1) {
            if (label_[b] == 1) {
              dualvar_[b] += delta;
            } else if (label_[b] == 2) {
              dualvar_[b] -= delta;
            }
          }
        }

        if (deltatype == 1) break;
        if (deltatype == 2) {
          allowedge_[deltaedge] = 1;
          int i = edges_[deltaedge].i;
          if (label_[inblossom_[i]] == 0) i = edges_[deltaedge].j;
          queue_.push_back(i);
        } else if (deltatype == 3) {
          allowedge_[deltaedge] = 1;
          queue_.push_back(edges_[deltaedge].i);
        } else {
          expand_blossom(deltablossom, false);
        }
      }
      if (!augmented) break;
      for (int b = n_; b < 2 * n_; ++b) {
        if (blossomparent_[b] == -1 && blossombase_[b] >= 0 && label_[b] == 1 && dualvar_[b] == 0) {
          expand_blossom(b, true);
        }
      }
    }
    (void)nedge;
  }
};

}  // namespace seqbal::detail
