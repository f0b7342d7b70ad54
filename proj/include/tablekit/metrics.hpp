#pragma once

#include <array>
#include <vector>

#include "tablekit/geometry.hpp"
#include "tablekit/structure.hpp"

namespace tablekit::metrics {

struct MetricCell {
    int id = -1;
    geometry::CellQuad quad;
};

struct MatchStats {
    long matched = 0;
    long pred_total = 0;
    long gt_total = 0;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Empty-set conventions: no predictions and no ground truth scores 1.0
/// across the board; one empty side scores 0.0.
Prf prf_from_stats(const MatchStats& s);

struct CellMatch {
    int gt_id = -1;
    int pred_id = -1;
    double iou = 0.0;
};

/// Greedy one-to-one matching by descending IoU among pairs at or above
/// `iou_thresh`; ties broken by (gt id, pred id). Ids must be unique within
/// each side.
std::vector<CellMatch> match_cells(const std::vector<MetricCell>& pred,
                                   const std::vector<MetricCell>& gt, double iou_thresh);

MatchStats physical_stats(const std::vector<MetricCell>& pred, const std::vector<MetricCell>& gt,
                          double iou_thresh = 0.9);

/// Cell-detection precision/recall/F1 at the given IoU threshold.
Prf physical_prf(const std::vector<MetricCell>& pred, const std::vector<MetricCell>& gt,
                 double iou_thresh = 0.9);

enum class AdjacencyDir { horizontal, vertical };

/// An immediate-neighbor relation between the cells with ids `a` < `b`.
struct AdjacencyRelation {
    int a = -1;
    int b = -1;
    AdjacencyDir dir = AdjacencyDir::horizontal;

    friend auto operator<=>(const AdjacencyRelation&, const AdjacencyRelation&) = default;
};

/// All horizontal (column-adjacent with overlapping rows) and vertical
/// (row-adjacent with overlapping columns) neighbor relations of a grid,
/// sorted.
std::vector<AdjacencyRelation> adjacency_relations(const structure::TableGrid& grid);

/// Adjacency-relation stats across all tables of one image. Cells are
/// matched across sides at `iou_thresh`; a predicted relation counts when
/// both endpoints match and the ground truth holds the mapped relation with
/// the same direction. Cell ids must be unique across each side's grids.
MatchStats adjacency_stats(const std::vector<structure::TableGrid>& pred,
                           const std::vector<structure::TableGrid>& gt, double iou_thresh = 0.6);

Prf adjacency_prf(const std::vector<structure::TableGrid>& pred,
                  const std::vector<structure::TableGrid>& gt, double iou_thresh = 0.6);

/// Structure tree for TEDS: a table root, one row node per row index, and
/// one cell node per cell under its start row, carrying the cell's spans.
struct TreeNode {
    enum class Label { table, row, cell };
    Label label = Label::table;
    int row_span = 1;
    int col_span = 1;
    std::vector<int> children;
};

struct StructureTree {
    std::vector<TreeNode> nodes;  // node 0 is the root
    int size() const { return static_cast<int>(nodes.size()); }
};

StructureTree tree_from_grid(const structure::TableGrid& grid);

/// Exact ordered tree edit distance (Zhang-Shasha), unit insert/delete
/// cost, relabel cost 1 when label or spans differ.
int tree_edit_distance(const StructureTree& a, const StructureTree& b);

/// Tree-edit-distance similarity: 1 - distance / max(|a|, |b|).
double teds(const StructureTree& a, const StructureTree& b);

/// IoU-weighted mean of F1 scores measured at thresholds 0.6, 0.7, 0.8,
/// 0.9 (in that order): sum(t * F1_t) / sum(t).
double weighted_avg_f1(const std::array<double, 4>& f1_at_iou);

}  // namespace tablekit::metrics
