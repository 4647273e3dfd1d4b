#!/usr/bin/env python3
"""Writes data/demo_lexicon.csv and the embedded copy include/affectsim/detail/demo_lexicon.inc."""
import pathlib

# token, valence, arousal (already on [0,1])
ROWS = """
amazing,0.93,0.78
angry,0.12,0.82
annoyed,0.22,0.62
annoying,0.2,0.6
anxious,0.2,0.75
ashamed,0.15,0.5
awesome,0.9,0.75
awful,0.08,0.6
bad,0.18,0.5
best,0.9,0.6
bitter,0.2,0.5
blissful,0.95,0.35
bored,0.3,0.12
boring,0.28,0.12
calm,0.7,0.1
cheerful,0.85,0.65
comfortable,0.75,0.25
content,0.78,0.2
crying,0.12,0.65
curious,0.6,0.68
delighted,0.92,0.5
depressed,0.08,0.25
despair,0.05,0.4
desperate,0.1,0.72
devastated,0.04,0.7
disappointed,0.2,0.4
disappointing,0.22,0.45
disaster,0.06,0.9
down,0.3,0.25
drained,0.15,0.15
dull,0.35,0.1
eager,0.75,0.72
ecstatic,0.97,0.95
energized,0.8,0.9
enraged,0.05,0.95
excited,0.86,0.9
exhausted,0.25,0.1
fantastic,0.92,0.78
fear,0.1,0.85
fine,0.65,0.35
frustrated,0.18,0.7
furious,0.06,0.82
gentle,0.75,0.2
glad,0.82,0.5
gloomy,0.15,0.2
good,0.78,0.45
grateful,0.88,0.38
great,0.86,0.6
grief,0.05,0.5
happy,0.9,0.6
hate,0.06,0.75
hopeless,0.05,0.15
horrible,0.05,0.85
intense,0.5,0.9
irritated,0.2,0.62
joy,0.95,0.7
joyful,0.94,0.75
lonely,0.12,0.3
love,0.95,0.55
lovely,0.9,0.4
mad,0.15,0.75
meh,0.42,0.25
miserable,0.05,0.45
nervous,0.25,0.75
nice,0.78,0.35
okay,0.55,0.4
ordinary,0.5,0.2
outrageous,0.15,0.9
panic,0.08,0.95
peace,0.85,0.08
peaceful,0.86,0.12
pleased,0.8,0.45
problem,0.25,0.6
quiet,0.55,0.08
relaxed,0.78,0.08
resting,0.6,0.05
sad,0.12,0.3
satisfied,0.8,0.35
scared,0.1,0.85
serene,0.85,0.05
sleepy,0.45,0.05
sorrow,0.08,0.35
stressed,0.15,0.85
terrible,0.05,0.75
terrified,0.05,0.95
thrilled,0.95,0.9
tired,0.3,0.08
tiresome,0.25,0.15
trouble,0.2,0.65
unhappy,0.12,0.45
upset,0.15,0.65
wonderful,0.93,0.55
worried,0.2,0.7
worse,0.15,0.55
worst,0.05,0.7
yay,0.9,0.85
""".strip()

root = pathlib.Path(__file__).resolve().parent.parent
csv_text = "token,valence,arousal\n" + ROWS + "\n"
(root / "data" / "demo_lexicon.csv").write_text(csv_text)
(root / "include" / "affectsim" / "detail" / "demo_lexicon.inc").write_text(
    "// Generated by scripts/gen_demo_lexicon.py from data/demo_lexicon.csv\nR\"LEX(" + csv_text + ")LEX\"\n")
