// Scripted end-to-end session against a real task service: one rewrite, the
// two-vote validation, a span fix (two agreeing workers), and three ratings.
// Afterwards the service must show one finalized turn with Keep status, valid
// spans, and a full rating summary.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { spawn, spawnSync, type ChildProcess } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { ApiClient } from '../src/api.js';
import {
    ratingComplete,
    ratingPayload,
    rewriteComplete,
    rewritePayload,
    selectionToSpan,
    spanPayload,
    votePayload,
} from '../src/logic.js';

const SEED_SCRIPT = `
import sys
from convforge.dialogue import DialogueAct, Frame, Outline, OutlineTurn, Speaker, TurnAnnotation
from convforge.scenario import Constraint, Scenario, UserGoal, UserProfile
from convforge.store import PipelineStore

turn = OutlineTurn(
    template="Time is evening.",
    annotation=TurnAnnotation(
        speaker=Speaker.USER,
        frames=(Frame(DialogueAct.INFORM, {"time": "evening"}),),
    ),
)
goal = UserGoal(intent="book_movie", constraints=(Constraint("time", "open"),))
outline = Outline(
    outline_id="ui1",
    scenario=Scenario(profile=UserProfile(), goals=(goal,), seed=0),
    turns=(turn,),
)
PipelineStore(sys.argv[1]).init_tasks([outline], k=1)
print("seeded")
`;

const REWRITE = 'Some time late at night works.';

function pythonHasPackage(): boolean {
    const probe = spawnSync('python3', ['-c', 'import convforge'], { timeout: 20_000 });
    return probe.status === 0;
}

const hasService = pythonHasPackage();

describe.skipIf(!hasService)('scripted annotation session', () => {
    const port = 8731 + (process.pid % 200);
    const api = new ApiClient(`http://127.0.0.1:${port}`);
    let server: ChildProcess | null = null;

    beforeAll(async () => {
        const stateDir = join(mkdtempSync(join(tmpdir(), 'convforge-ui-')), 'state');
        const seedPath = join(stateDir, '..', 'seed.py');
        writeFileSync(seedPath, SEED_SCRIPT);
        const seeded = spawnSync('python3', [seedPath, stateDir], { timeout: 30_000 });
        expect(seeded.status).toBe(0);

        server = spawn('python3', [
            '-m', 'convforge.cli', 'serve', '--state-dir', stateDir, '--port', String(port),
        ]);
        const deadline = Date.now() + 30_000;
        for (;;) {
            try {
                await api.status();
                break;
            } catch {
                if (Date.now() > deadline)
                    throw new Error('service did not come up');
                await new Promise((resolve) => setTimeout(resolve, 250));
            }
        }
    });

    afterAll(() => {
        server?.kill();
    });

    it('completes rewrite, votes, span fix, and ratings', async () => {
        // 1. contextual rewrite
        const task = await api.nextTask('paraphrase', 'writer');
        expect(task?.type).toBe('paraphrase');
        if (task?.type !== 'paraphrase') return;
        expect(task.turns.map((t) => t.template)).toEqual(['Time is evening.']);
        expect(rewriteComplete([''], task)).toBe(false);
        expect(rewriteComplete([REWRITE], task)).toBe(true);
        await api.submit(task.task_id, rewritePayload('writer', [REWRITE]));

        // 2. two same-meaning votes from distinct workers
        for (const voter of ['vick', 'vera']) {
            const vote = await api.nextTask('validate', voter);
            expect(vote?.type).toBe('validate');
            if (vote?.type !== 'validate') return;
            expect(vote.utterance).toBe(REWRITE);
            await api.submit(vote.task_id, votePayload(voter, true));
        }
        expect(await api.nextTask('validate', 'vick')).toBeNull();

        // 3. one span fix ("evening" was reworded): two agreeing selections
        for (const fixer of ['sam', 'sol']) {
            const span = await api.nextTask('span', fixer);
            expect(span?.type).toBe('span');
            if (span?.type !== 'span') return;
            expect(span.slot).toBe('time');
            expect(span.value).toBe('evening');
            const start = span.utterance.indexOf('night');
            const selection = selectionToSpan(span.utterance, start, start + 'night'.length);
            expect(selection).not.toBeNull();
            await api.submit(span.task_id, spanPayload(fixer, selection!));
        }
        expect(await api.nextTask('span', 'sam')).toBeNull();

        // 4. three ratings on the finalized turn
        for (const rater of ['r1', 'r2', 'r3']) {
            const rate = await api.nextTask('rate', rater);
            expect(rate?.type).toBe('rate');
            if (rate?.type !== 'rate') return;
            expect(rate.speaker).toBe('U');
            expect(rate.dimensions).toEqual(['natural']);
            const scores = new Map([['natural', 5]]);
            expect(ratingComplete(scores, rate)).toBe(true);
            await api.submit(rate.task_id, ratingPayload(rater, scores));
        }

        // 5. service state: Keep status, valid spans, full rating summary
        const status = (await api.status()) as {
            validation_outcomes: Record<string, string>;
            dialogues: { finalized: number };
            ratings: { fully_rated_turns: number };
        };
        expect(status.validation_outcomes['pt-ui1-0::0']).toBe('keep');
        expect(status.dialogues.finalized).toBe(1);
        expect(status.ratings.fully_rated_turns).toBe(1);

        const corpus = (await (
            await fetch(`http://127.0.0.1:${port}/api/corpus`)
        ).json()) as {
            dialogues: {
                turns: {
                    utterance: string;
                    spans: { slot: string; start: number; end: number; value: string }[];
                }[];
            }[];
        };
        expect(corpus.dialogues).toHaveLength(1);
        const turn = corpus.dialogues[0].turns[0];
        expect(turn.utterance).toBe(REWRITE);
        expect(turn.spans).toHaveLength(1);
        const [span] = turn.spans;
        expect(span.slot).toBe('time');
        expect(turn.utterance.slice(span.start, span.end)).toBe(span.value);
        expect(span.value).toBe('night');

        const summary = await api.ratingSummary();
        expect(summary.natural.count).toBe(3);
        expect(summary.natural.mean).toBe(5.0);
    });

    it('rejects a duplicate vote from the same worker', async () => {
        await expect(
            api.submit('v::pt-ui1-0::0', votePayload('vick', true)),
        ).rejects.toMatchObject({ status: 409 });
    });
});
