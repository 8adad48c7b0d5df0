"""Instruction text attached to every generated instance."""

_CAMERA = """Camera:
* Static camera.
* No zoom.
* No pan.
* No glitches, noise, or artifacts."""

MAZE_VIDEO = f"""Create a 2D animation based on the provided image of a maze.
The custom character slides smoothly along the white path, stopping perfectly on the red circle destination.
The character never slides or crosses into the black segments of the maze.
The camera is a static, top-down view showing the entire maze.
Maze:
* The maze paths are white, the walls are black.
* The character starts from its initial position.
* The character slides smoothly along the white path.
* The character never slides or crosses into the black segments of the maze.
* The character stops perfectly on the red circle.
Scene:
* No change in scene composition.
* No change in the layout of the maze.
* The character travels along the path without speeding up or slowing down.
{_CAMERA}"""

_TANGRAM_HEAD = """Create a 2D animation showing the step-by-step assembly of a Tangram puzzle.
Puzzle:
* The silhouette of the puzzle is represented as black area in the white background.
* The Tangram pieces include: 2 big triangles, 1 medium triangle, 2 small triangles, 1 square, and 1 parallelogram."""

TANGRAM_FADEIN = f"""{_TANGRAM_HEAD}
* The pieces appear one by one, fading in from transparent to their specific colors to fill the silhouette.
Colors:
* Big triangles: blue and orange
* Small triangles: purple and yellow
* Medium triangle: green
* Square: grey
* Parallelogram: red
Scene:
* No change in scene composition.
* No change in the silhouette of the puzzle.
{_CAMERA}"""

_SIDEBAR_TAIL = f"""Colors:
* Every piece has a distinct, unique color, as shown on the left side.
Scene:
* No change in scene composition.
* No change in the silhouette of the puzzle.
* No change in the designated colors and shapes of the pieces.
{_CAMERA}"""

TANGRAM_ROTATION = f"""{_TANGRAM_HEAD}
* The shapes of the pieces can not be altered.
* Sequential accumulation constraint: Pieces move and orient individually one by one. Upon placement, every piece is permanently locked in place with its unique color and orientation. Continue until the silhouette is full.
{_SIDEBAR_TAIL}"""

TANGRAM_TRANSLATION = f"""{_TANGRAM_HEAD}
* The shapes of the pieces can not be altered.
* Sequential accumulation constraint: Pieces move individually one by one. Upon placement, every piece is permanently locked in place with its unique color and orientation. Continue until the silhouette is full.
{_SIDEBAR_TAIL}"""

TANGRAM = {"FadeIn": TANGRAM_FADEIN, "Rotation": TANGRAM_ROTATION, "Translation": TANGRAM_TRANSLATION}
