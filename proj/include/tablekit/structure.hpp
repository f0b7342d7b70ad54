#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tablekit/geometry.hpp"

namespace tablekit::structure {

enum class Side { up = 0, right = 1, down = 2, left = 3 };
enum class Orientation { horizontal, vertical };

/// A cell prepared for structure parsing: its quad plus one grid-vertex key
/// per canonical corner. Two corners share a key exactly when they sit on
/// the same physical grid vertex.
struct StructCell {
    int id = -1;
    geometry::CellQuad quad;
    std::array<std::int64_t, 4> vertex_keys{};
};

struct EdgeRef {
    int cell = -1;  // index into the cell vector, not the cell id
    Side side = Side::up;
};

/// A maximal run of collinear cell edges: one ruling line of the table.
struct GridLine {
    Orientation orientation = Orientation::horizontal;
    std::vector<EdgeRef> edges;
    int index = -1;  // dense topological index, assigned by order_lines
};

struct CellSpan {
    int cell_id = -1;
    geometry::CellQuad quad;
    int start_row = 0, end_row = 0;
    int start_col = 0, end_col = 0;
};

/// Rectangular row/column structure of one table. Cells occupy the
/// inclusive span [start_row, end_row] x [start_col, end_col]; no two cells
/// overlap.
struct TableGrid {
    int table_id = 0;
    int n_rows = 0;
    int n_cols = 0;
    std::vector<CellSpan> cells;
};

/// Groups the up/down (horizontal) and left/right (vertical) cell edges
/// into ruling lines via connected components over shared vertex keys.
/// Throws std::runtime_error when a cell's opposite edges land on the same
/// line (degenerate keys).
std::vector<GridLine> build_lines(const std::vector<StructCell>& cells);

/// Assigns dense per-orientation indices by topological order: a cell's up
/// line precedes its down line, left precedes right. Boundary segments that
/// a merged cell (or a stack of them) interrupts are first reunited by
/// continuing each loose end straight through the interrupting cells.
/// Ambiguities fall back to the mean orthogonal coordinate of the line's
/// edge endpoints, so mild curvature cannot flip locally comparable lines.
/// Throws on cyclic constraints (degenerate geometry).
void order_lines(std::vector<GridLine>& lines, const std::vector<StructCell>& cells);

/// Reads row/column spans off the ordered lines: start_row = up-line index,
/// end_row = down-line index - 1, likewise for columns. Validates that no
/// two cells overlap. Throws std::runtime_error on violations.
TableGrid assign_rc(const std::vector<StructCell>& cells, const std::vector<GridLine>& lines,
                    int table_id = 0);

/// build_lines + order_lines + assign_rc.
TableGrid parse_group(const std::vector<StructCell>& cells, int table_id = 0);

/// Convenience for ground-truth tables: derives vertex keys by merging
/// corners within `tol` image pixels (same rule the target encoder applies).
std::vector<StructCell> cells_with_shared_corners(
    const std::vector<std::pair<int, geometry::CellQuad>>& cells, double tol);

}  // namespace tablekit::structure
