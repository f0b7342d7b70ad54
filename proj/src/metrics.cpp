#include "tablekit/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace tablekit::metrics {

Prf prf_from_stats(const MatchStats& s) {
    if (s.pred_total == 0 && s.gt_total == 0) return {1.0, 1.0, 1.0};
    Prf p;
    p.precision = s.pred_total > 0 ? static_cast<double>(s.matched) / s.pred_total : 0.0;
    p.recall = s.gt_total > 0 ? static_cast<double>(s.matched) / s.gt_total : 0.0;
    if (p.precision + p.recall > 0.0)
        p.f1 = 2.0 * p.precision * p.recall / (p.precision + p.recall);
    return p;
}

std::vector<CellMatch> match_cells(const std::vector<MetricCell>& pred,
                                   const std::vector<MetricCell>& gt, double iou_thresh) {
    for (const auto* side : {&pred, &gt}) {
        std::set<int> ids;
        for (const auto& c : *side)
            if (!ids.insert(c.id).second)
                throw std::invalid_argument("match_cells: duplicate cell id " +
                                            std::to_string(c.id));
    }

    std::vector<CellMatch> candidates;
    for (const auto& g : gt) {
        for (const auto& p : pred) {
            const double iou = geometry::quad_iou(p.quad, g.quad);
            if (iou >= iou_thresh) candidates.push_back({g.id, p.id, iou});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const CellMatch& a, const CellMatch& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
        return a.pred_id < b.pred_id;
    });

    std::set<int> used_gt, used_pred;
    std::vector<CellMatch> out;
    for (const auto& c : candidates) {
        if (used_gt.count(c.gt_id) || used_pred.count(c.pred_id)) continue;
        used_gt.insert(c.gt_id);
        used_pred.insert(c.pred_id);
        out.push_back(c);
    }
    return out;
}

MatchStats physical_stats(const std::vector<MetricCell>& pred, const std::vector<MetricCell>& gt,
                          double iou_thresh) {
    MatchStats s;
    s.pred_total = static_cast<long>(pred.size());
    s.gt_total = static_cast<long>(gt.size());
    s.matched = static_cast<long>(match_cells(pred, gt, iou_thresh).size());
    return s;
}

Prf physical_prf(const std::vector<MetricCell>& pred, const std::vector<MetricCell>& gt,
                 double iou_thresh) {
    return prf_from_stats(physical_stats(pred, gt, iou_thresh));
}

std::vector<AdjacencyRelation> adjacency_relations(const structure::TableGrid& grid) {
    auto overlap = [](int a0, int a1, int b0, int b1) { return a0 <= b1 && b0 <= a1; };
    std::set<AdjacencyRelation> rels;
    for (const auto& p : grid.cells) {
        for (const auto& q : grid.cells) {
            if (p.cell_id == q.cell_id) continue;
            if (p.end_col + 1 == q.start_col && overlap(p.start_row, p.end_row, q.start_row, q.end_row))
                rels.insert({std::min(p.cell_id, q.cell_id), std::max(p.cell_id, q.cell_id),
                             AdjacencyDir::horizontal});
            if (p.end_row + 1 == q.start_row && overlap(p.start_col, p.end_col, q.start_col, q.end_col))
                rels.insert({std::min(p.cell_id, q.cell_id), std::max(p.cell_id, q.cell_id),
                             AdjacencyDir::vertical});
        }
    }
    return {rels.begin(), rels.end()};
}

namespace {

std::vector<MetricCell> grid_cells(const std::vector<structure::TableGrid>& grids) {
    std::vector<MetricCell> cells;
    for (const auto& g : grids)
        for (const auto& c : g.cells) cells.push_back({c.cell_id, c.quad});
    return cells;
}

std::set<AdjacencyRelation> all_relations(const std::vector<structure::TableGrid>& grids) {
    std::set<AdjacencyRelation> rels;
    for (const auto& g : grids) {
        auto r = adjacency_relations(g);
        rels.insert(r.begin(), r.end());
    }
    return rels;
}

}  // namespace

MatchStats adjacency_stats(const std::vector<structure::TableGrid>& pred,
                           const std::vector<structure::TableGrid>& gt, double iou_thresh) {
    const auto pred_cells = grid_cells(pred);
    const auto gt_cells = grid_cells(gt);
    const auto pred_rels = all_relations(pred);
    const auto gt_rels = all_relations(gt);

    std::map<int, int> to_gt;
    for (const auto& m : match_cells(pred_cells, gt_cells, iou_thresh)) to_gt[m.pred_id] = m.gt_id;

    MatchStats s;
    s.pred_total = static_cast<long>(pred_rels.size());
    s.gt_total = static_cast<long>(gt_rels.size());
    for (const auto& r : pred_rels) {
        const auto a = to_gt.find(r.a);
        const auto b = to_gt.find(r.b);
        if (a == to_gt.end() || b == to_gt.end()) continue;
        const AdjacencyRelation mapped{std::min(a->second, b->second),
                                       std::max(a->second, b->second), r.dir};
        if (gt_rels.count(mapped)) ++s.matched;
    }
    return s;
}

Prf adjacency_prf(const std::vector<structure::TableGrid>& pred,
                  const std::vector<structure::TableGrid>& gt, double iou_thresh) {
    return prf_from_stats(adjacency_stats(pred, gt, iou_thresh));
}

StructureTree tree_from_grid(const structure::TableGrid& grid) {
    StructureTree t;
    t.nodes.push_back({TreeNode::Label::table, 1, 1, {}});
    for (int r = 0; r < grid.n_rows; ++r) {
        const int row_node = t.size();
        t.nodes.push_back({TreeNode::Label::row, 1, 1, {}});
        t.nodes[0].children.push_back(row_node);
        for (const auto& c : grid.cells) {  // sorted by (start_row, start_col)
            if (c.start_row != r) continue;
            const int cell_node = t.size();
            t.nodes.push_back({TreeNode::Label::cell, c.end_row - c.start_row + 1,
                               c.end_col - c.start_col + 1, {}});
            t.nodes[static_cast<size_t>(row_node)].children.push_back(cell_node);
        }
    }
    return t;
}

namespace {

// Postorder form used by the Zhang-Shasha distance.
struct ZsTree {
    std::vector<std::array<int, 3>> label;  // (tag, row_span, col_span) per postorder node
    std::vector<int> lml;                   // leftmost leaf of each subtree
    std::vector<int> keyroots;
    int n = 0;
};

ZsTree zs_build(const StructureTree& t) {
    ZsTree z;
    z.label.reserve(t.nodes.size());
    z.lml.reserve(t.nodes.size());

    auto visit = [&](auto&& self, int node) -> int {
        int first_leaf = -1;
        for (int c : t.nodes[static_cast<size_t>(node)].children) {
            const int leaf = self(self, c);
            if (first_leaf < 0) first_leaf = leaf;
        }
        const int idx = z.n++;
        if (first_leaf < 0) first_leaf = idx;
        const auto& nd = t.nodes[static_cast<size_t>(node)];
        const int tag = nd.label == TreeNode::Label::table ? 0
                        : nd.label == TreeNode::Label::row ? 1
                                                           : 2;
        z.label.push_back({tag, nd.label == TreeNode::Label::cell ? nd.row_span : 0,
                           nd.label == TreeNode::Label::cell ? nd.col_span : 0});
        z.lml.push_back(first_leaf);
        return first_leaf;
    };
    visit(visit, 0);

    std::map<int, int> last_with_lml;  // leftmost leaf -> highest postorder index
    for (int i = 0; i < z.n; ++i) last_with_lml[z.lml[static_cast<size_t>(i)]] = i;
    for (const auto& [lml, i] : last_with_lml) z.keyroots.push_back(i);
    std::sort(z.keyroots.begin(), z.keyroots.end());
    return z;
}

}  // namespace

int tree_edit_distance(const StructureTree& a, const StructureTree& b) {
    const ZsTree t1 = zs_build(a);
    const ZsTree t2 = zs_build(b);
    auto rename = [&](int i, int j) {
        return t1.label[static_cast<size_t>(i)] == t2.label[static_cast<size_t>(j)] ? 0 : 1;
    };

    std::vector<std::vector<int>> td(static_cast<size_t>(t1.n),
                                     std::vector<int>(static_cast<size_t>(t2.n), 0));
    std::vector<std::vector<int>> fd;
    for (int i : t1.keyroots) {
        for (int j : t2.keyroots) {
            const int li = t1.lml[static_cast<size_t>(i)];
            const int lj = t2.lml[static_cast<size_t>(j)];
            const int m = i - li + 1;
            const int n = j - lj + 1;
            fd.assign(static_cast<size_t>(m) + 1, std::vector<int>(static_cast<size_t>(n) + 1, 0));
            for (int di = 1; di <= m; ++di) fd[di][0] = fd[di - 1][0] + 1;
            for (int dj = 1; dj <= n; ++dj) fd[0][dj] = fd[0][dj - 1] + 1;
            for (int di = 1; di <= m; ++di) {
                for (int dj = 1; dj <= n; ++dj) {
                    const int ni = li + di - 1;  // actual postorder nodes
                    const int nj = lj + dj - 1;
                    const int del = fd[di - 1][dj] + 1;
                    const int ins = fd[di][dj - 1] + 1;
                    if (t1.lml[static_cast<size_t>(ni)] == li &&
                        t2.lml[static_cast<size_t>(nj)] == lj) {
                        fd[di][dj] = std::min({del, ins, fd[di - 1][dj - 1] + rename(ni, nj)});
                        td[static_cast<size_t>(ni)][static_cast<size_t>(nj)] = fd[di][dj];
                    } else {
                        const int pi = t1.lml[static_cast<size_t>(ni)] - li;
                        const int pj = t2.lml[static_cast<size_t>(nj)] - lj;
                        fd[di][dj] = std::min(
                            {del, ins,
                             fd[pi][pj] + td[static_cast<size_t>(ni)][static_cast<size_t>(nj)]});
                    }
                }
            }
        }
    }
    return td[static_cast<size_t>(t1.n - 1)][static_cast<size_t>(t2.n - 1)];
}

double teds(const StructureTree& a, const StructureTree& b) {
    const int dist = tree_edit_distance(a, b);
    const int norm = std::max(a.size(), b.size());
    return 1.0 - static_cast<double>(dist) / norm;
}

double weighted_avg_f1(const std::array<double, 4>& f1_at_iou) {
    constexpr std::array<double, 4> thresholds{0.6, 0.7, 0.8, 0.9};
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 4; ++i) {
        num += thresholds[static_cast<size_t>(i)] * f1_at_iou[static_cast<size_t>(i)];
        den += thresholds[static_cast<size_t>(i)];
    }
    return num / den;
}

}  // namespace tablekit::metrics
