"""
Generate sample datasets for demonstration purposes
Creates a small screen corpus, scripted annotators, episodes and agent predictions
"""

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import argparse
from typing import Dict, List

import numpy as np
import yaml

from src.actions import Action, ActionType, format_action, normalize_bbox
from src.data import DataLoader, write_jsonl

# (feature, state, box) per screen; boxes are on the 0-1000 grid
SCREENS = {
    'settings_network': [('Wi-Fi', 'on', [800, 150, 960, 230]), ('Airplane mode', 'off', [800, 250, 960, 330]),
                         ('Mobile data', 'on', [800, 350, 960, 430])],
    'settings_connected': [('Bluetooth', 'off', [800, 150, 960, 230]), ('NFC', 'on', [800, 250, 960, 330])],
    'settings_sound': [('Do not disturb', 'off', [800, 150, 960, 230]), ('Vibrate for calls', 'on', [800, 250, 960, 330])],
    'clock_alarms': [('7:30 AM alarm', 'on', [800, 150, 960, 230]), ('9:00 AM alarm', 'off', [800, 250, 960, 330])],
    'youtube_captions': [('Captions', 'off', [800, 150, 960, 230])],
}
# Non-toggle widgets on every screen
BACK_BOX = [20, 40, 140, 110]
TITLE_BOX = [160, 40, 700, 110]
SCREEN_DIMS = (1080, 2400)


def _px(box: List[int]) -> List[int]:
    w, h = SCREEN_DIMS
    return [round(box[0] * w / 1000), round(box[1] * h / 1000), round(box[2] * w / 1000), round(box[3] * h / 1000)]


def generate_records() -> List[Dict]:
    """One record per screen; the first is stored in pixels to exercise normalization"""
    print("Generating screen records...")
    records = []
    for i, (screen_id, toggles) in enumerate(SCREENS.items()):
        original = [BACK_BOX] + [box for _, _, box in toggles]
        # the parser finds the title plus near-duplicates of the toggles
        parsed = [TITLE_BOX] + [[x1 + 2, y1 + 1, x2 - 2, y2 - 1] for _, _, (x1, y1, x2, y2) in toggles]
        record = {
            'screen_id': screen_id,
            'image_ref': f"images/{screen_id}.png",
            'screen_dims': list(SCREEN_DIMS),
            'original_boxes': original,
            'parsed_boxes': parsed,
            'source_dataset': 'demo',
            'source_instruction': f"Open {screen_id.replace('_', ' ')}",
        }
        if i == 0:
            record['box_units'] = 'px'
            record['original_boxes'] = [_px(b) for b in original]
            record['parsed_boxes'] = [_px(b) for b in parsed]
        records.append(record)
    return records


def generate_mock_annotators(records: List[Dict]) -> Dict:
    """
    Scripted responses for both annotators

    Most toggles are agreed on; a few exercise each drop reason.
    """
    print("Generating scripted annotators...")
    entries: Dict[str, List[Dict]] = {'G': [], 'Q': []}
    for row in records:
        screen_id = row['screen_id']
        toggles = SCREENS[screen_id]
        for feature, state, box in toggles:
            if row.get('box_units') == 'px':
                box = normalize_bbox(_px(box), SCREEN_DIMS).to_list()
            answer = f"State: {state}\nFeature: {feature}"
            g = {'screen_id': screen_id, 'box': box, 'identify': 'Answer: yes', 'state_feature': answer}
            q = dict(g)
            if feature == 'NFC':
                q['identify'] = 'Answer: no'
            elif feature == 'Vibrate for calls':
                q['state_feature'] = f"State: off\nFeature: {feature}"
            elif feature == '9:00 AM alarm':
                q['state_feature'] = f"State: {state}\nFeature: 9 AM alarm"
            elif feature == 'Mobile data':
                # case and spacing differences still agree
                q['state_feature'] = f"State: {state}\nFeature:  mobile   DATA"
            elif feature == 'Captions':
                q['identify'] = ['I think so', 'Answer: yes']
            entries['G'].append(g)
            entries['Q'].append(q)
    return {'annotators': entries}


def generate_episodes() -> List[Dict]:
    print("Generating agentic episodes...")
    return [
        {
            'episode_id': 'ep_wifi_off',
            'instruction': 'Turn off Wi-Fi',
            'steps': [
                {'step': 0, 'action': {'type': 'OPENAPP', 'app_name': 'Settings'}, 'layout': [],
                 'image_ref': 'images/home.png'},
                {'step': 1, 'action': {'type': 'CLICK', 'point': [500, 190]},
                 'layout': [[0, 150, 1000, 230], [0, 250, 1000, 330]], 'image_ref': 'images/settings.png'},
                {'step': 2, 'action': {'type': 'CLICK', 'point': [880, 190]},
                 'layout': [BACK_BOX, [800, 150, 960, 230]], 'image_ref': 'images/settings_network.png'},
                {'step': 3, 'action': {'type': 'COMPLETED'}, 'layout': [], 'image_ref': 'images/settings_network_2.png'},
            ],
        },
        {
            'episode_id': 'ep_bt_on',
            'instruction': 'Make sure Bluetooth is on',
            'steps': [
                {'step': 0, 'action': {'type': 'OPENAPP', 'app_name': 'Settings'}, 'layout': [],
                 'image_ref': 'images/home.png'},
                {'step': 1, 'action': {'type': 'SCROLL', 'direction': 'down'}, 'layout': [],
                 'image_ref': 'images/settings.png'},
                {'step': 2, 'action': {'type': 'CLICK', 'point': [500, 290]},
                 'layout': [[0, 150, 1000, 230], [0, 250, 1000, 330]], 'image_ref': 'images/settings_2.png'},
                {'step': 3, 'action': {'type': 'COMPLETED'}, 'layout': [[800, 150, 960, 230]],
                 'image_ref': 'images/settings_connected.png', 'toggle': True},
            ],
        },
        {
            'episode_id': 'ep_search',
            'instruction': 'Search for weather in Chrome',
            'steps': [
                {'step': 0, 'action': {'type': 'OPENAPP', 'app_name': 'Chrome'}, 'layout': [],
                 'image_ref': 'images/home.png'},
                {'step': 1, 'action': {'type': 'TYPE', 'text': 'weather'}, 'layout': [],
                 'image_ref': 'images/chrome.png'},
                {'step': 2, 'action': {'type': 'PRESS'}, 'layout': [], 'image_ref': 'images/chrome_2.png'},
            ],
        },
    ]


def generate_toggle_annotations() -> List[Dict]:
    return [
        {'episode_id': 'ep_wifi_off', 'step': 2, 'state': 'on', 'feature': 'Wi-Fi'},
        {'episode_id': 'ep_bt_on', 'step': 3, 'state': 'on', 'feature': 'Bluetooth'},
    ]


def _noisy_action(label: Action, toggle_center, rng: np.random.Generator, p_flip: float) -> Action:
    """A plausible but imperfect agent: mostly right, sometimes blind to the state"""
    if rng.random() < p_flip:
        if label.type == ActionType.CLICK:
            return Action.completed()
        return Action.click(*toggle_center)
    if label.type == ActionType.CLICK:
        dx, dy = rng.integers(-40, 41, size=2)
        return Action.click(int(min(max(label.point.x + dx, 0), 1000)), int(min(max(label.point.y + dy, 0), 1000)))
    return label


def generate_predictions(samples_path: Path, seed: int = 42, p_flip: float = 0.3) -> List[Dict]:
    print(f"Generating state-control predictions for {samples_path}...")
    rng = np.random.default_rng(seed)
    rows = []
    for s in DataLoader(show_progress=False).load_samples(samples_path):
        c = s.toggle_box.center
        pred = _noisy_action(s.label_action, (c.x, c.y), rng, p_flip)
        rows.append({'sample_id': s.sample_id, 'prediction': format_action(pred)})
    return rows


def generate_step_predictions(episodes: List[Dict], seed: int = 42) -> List[Dict]:
    print("Generating agentic step predictions...")
    rng = np.random.default_rng(seed)
    rows = []
    for ep in episodes:
        for step in ep['steps']:
            label = Action.from_dict(step['action'])
            if label.type == ActionType.CLICK:
                pred = _noisy_action(label, (label.point.x, label.point.y), rng, 0.0)
            elif rng.random() < 0.2:
                pred = Action.completed()
            else:
                pred = label
            rows.append({'episode_id': ep['episode_id'], 'step': step['step'], 'prediction': format_action(pred)})
    return rows


def main():
    parser = argparse.ArgumentParser(description='Generate demo data')
    parser.add_argument('--output-dir', type=str, default='data/samples', help='Where to write the corpus')
    parser.add_argument('--predictions-for', type=str, default=None,
                        help='Sample JSONL to write simulated predictions for (run after build)')
    parser.add_argument('--seed', type=int, default=42)
    args = parser.parse_args()

    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if args.predictions_for:
        path = out / 'predictions.jsonl'
        write_jsonl(path, generate_predictions(Path(args.predictions_for), args.seed))
        print(f"Saved {path}")
        return

    records = generate_records()
    write_jsonl(out / 'records.jsonl', records)
    with open(out / 'mock_annotators.yaml', 'w', encoding='utf-8') as f:
        yaml.safe_dump(generate_mock_annotators(records), f, sort_keys=False, allow_unicode=True)

    episodes = generate_episodes()
    write_jsonl(out / 'episodes.jsonl', episodes)
    write_jsonl(out / 'toggle_annotations.jsonl', generate_toggle_annotations())
    write_jsonl(out / 'step_predictions.jsonl', generate_step_predictions(episodes, args.seed))

    print(f"\n✅ Demo corpus saved to {out}/")
    for path in sorted(out.iterdir()):
        print(f"  - {path.name}")


if __name__ == "__main__":
    main()
