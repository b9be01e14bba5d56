// Screen logic kept free of the DOM so it can be tested headlessly: submit
// gates, payload builders, and span offset arithmetic.

import type { ParaphraseTask, RateTask, SpanTask } from './api.js';

export function rewriteComplete(utterances: string[], task: ParaphraseTask): boolean {
    if (utterances.length !== task.turns.length)
        return false;
    return utterances.every((u) => u.trim().length > 0);
}

export function rewritePayload(workerId: string, utterances: string[]) {
    return { worker_id: workerId, utterances: utterances.map((u) => u.trim()) };
}

export function votePayload(workerId: string, sameMeaning: boolean) {
    return { worker_id: workerId, same_meaning: sameMeaning };
}

export interface SpanSelection {
    start: number;
    end: number;
}

/**
 * Normalize a drag selection into character offsets within the utterance.
 * Returns null when the selection is empty or escapes the utterance text.
 */
export function selectionToSpan(
    utterance: string,
    anchor: number,
    focus: number,
): SpanSelection | null {
    const start = Math.min(anchor, focus);
    const end = Math.max(anchor, focus);
    if (start === end)
        return null;
    if (start < 0 || end > utterance.length)
        return null;
    return { start, end };
}

export function spanPayload(workerId: string, selection: SpanSelection) {
    return { worker_id: workerId, start: selection.start, end: selection.end };
}

/** The selected text must round-trip exactly; the server re-checks this. */
export function selectedText(utterance: string, selection: SpanSelection): string {
    return utterance.slice(selection.start, selection.end);
}

export function ratingComplete(scores: Map<string, number>, task: RateTask): boolean {
    return task.dimensions.every((dim) => {
        const score = scores.get(dim);
        return score !== undefined && score >= 1 && score <= 5;
    });
}

export function ratingPayload(workerId: string, scores: Map<string, number>) {
    return { worker_id: workerId, scores: Object.fromEntries(scores) };
}

export function speakerLabel(speaker: 'U' | 'S'): string {
    return speaker === 'U' ? 'User' : 'System';
}

/** Rating dimensions are fixed per speaker; mirror of the server's table. */
export function expectedDimensions(speaker: 'U' | 'S'): string[] {
    return speaker === 'U' ? ['natural'] : ['polite', 'clear', 'optimal'];
}

export function describeSpanTask(task: SpanTask): string {
    return `Select where the value "${task.value}" for slot "${task.slot}" appears (possibly reworded).`;
}
