// Single-page annotation app. Everything displayed comes from a service
// fetch; every mutation is a POST the service validates.

import { ApiClient, ServiceError, Task, TaskType, ParaphraseTask, ValidateTask, SpanTask, RateTask } from './api.js';
import {
    describeSpanTask,
    expectedDimensions,
    ratingComplete,
    ratingPayload,
    rewriteComplete,
    rewritePayload,
    selectionToSpan,
    selectedText,
    spanPayload,
    speakerLabel,
    votePayload,
} from './logic.js';

const api = new ApiClient('');

const TASK_TYPES: { id: TaskType; label: string }[] = [
    { id: 'paraphrase', label: 'Rewrite' },
    { id: 'validate', label: 'Validate' },
    { id: 'span', label: 'Mark span' },
    { id: 'rate', label: 'Rate' },
];

let currentType: TaskType = 'paraphrase';

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className = '',
    text = '',
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text)
        node.textContent = text;
    return node;
}

function workerId(): string {
    const input = document.getElementById('worker') as HTMLInputElement;
    return input.value.trim();
}

function setMessage(text: string, isError = false): void {
    const box = document.getElementById('message')!;
    box.textContent = text;
    box.className = isError ? 'message error' : 'message';
}

async function refreshStatus(): Promise<void> {
    try {
        const status = await api.status();
        document.getElementById('status')!.textContent = JSON.stringify(status, null, 2);
    } catch (err) {
        document.getElementById('status')!.textContent = String(err);
    }
}

async function loadNext(): Promise<void> {
    const container = document.getElementById('task')!;
    container.replaceChildren();
    setMessage('');
    if (!workerId()) {
        setMessage('Enter a worker name first.', true);
        return;
    }
    let task: Task | null;
    try {
        task = await api.nextTask(currentType, workerId());
    } catch (err) {
        setMessage(String(err), true);
        return;
    }
    if (task === null) {
        container.append(el('p', 'empty', `No open ${currentType} tasks right now.`));
        return;
    }
    if (task.type === 'paraphrase')
        renderRewrite(container, task);
    else if (task.type === 'validate')
        renderValidate(container, task);
    else if (task.type === 'span')
        renderSpan(container, task);
    else
        renderRate(container, task);
}

async function submitAndAdvance(taskId: string, payload: Record<string, unknown>): Promise<void> {
    try {
        await api.submit(taskId, payload);
        setMessage('Submitted. Loading the next task…');
        await refreshStatus();
        await loadNext();
    } catch (err) {
        if (err instanceof ServiceError)
            setMessage(`${err.kind}: ${err.message}`, true);
        else
            setMessage(String(err), true);
    }
}

// -- rewrite -----------------------------------------------------------------

function renderRewrite(container: HTMLElement, task: ParaphraseTask): void {
    container.append(
        el('h2', '', 'Rewrite the whole dialogue'),
        el(
            'p',
            'instructions',
            'Rewrite every line in your own words. Keep the meaning and keep every ' +
                'highlighted value (names, times, counts) exactly as written.',
        ),
    );
    const inputs: HTMLInputElement[] = [];
    const list = el('div', 'turns');
    for (const turn of task.turns) {
        const row = el('div', 'turn');
        row.append(el('span', `speaker ${turn.speaker}`, speakerLabel(turn.speaker)));
        row.append(el('span', 'template', turn.template));
        const input = el('input', 'rewrite-input');
        input.type = 'text';
        input.placeholder = 'your wording…';
        input.dataset.index = String(turn.index);
        inputs.push(input);
        row.append(input);
        list.append(row);
    }
    container.append(list);
    const submit = el('button', 'submit', 'Submit rewrite');
    submit.disabled = true;
    const gate = () => {
        submit.disabled = !rewriteComplete(inputs.map((i) => i.value), task);
    };
    inputs.forEach((input) => input.addEventListener('input', gate));
    submit.addEventListener('click', () =>
        submitAndAdvance(task.task_id, rewritePayload(workerId(), inputs.map((i) => i.value))),
    );
    container.append(submit);
}

// -- validate ----------------------------------------------------------------

function renderValidate(container: HTMLElement, task: ValidateTask): void {
    container.append(
        el('h2', '', 'Do these two lines mean the same thing?'),
    );
    const context = el('div', 'context');
    task.context.forEach((turn, i) => {
        const row = el('div', i === task.turn_index ? 'turn focus' : 'turn dim');
        row.append(el('span', `speaker ${turn.speaker}`, speakerLabel(turn.speaker)));
        row.append(el('span', 'template', turn.template ?? ''));
        context.append(row);
    });
    container.append(context);
    container.append(el('p', 'pair', `Original: ${task.template}`));
    container.append(el('p', 'pair', `Rewrite: ${task.utterance}`));
    const yes = el('button', 'submit', 'Same meaning');
    const no = el('button', 'danger', 'Different meaning');
    yes.addEventListener('click', () =>
        submitAndAdvance(task.task_id, votePayload(workerId(), true)),
    );
    no.addEventListener('click', () =>
        submitAndAdvance(task.task_id, votePayload(workerId(), false)),
    );
    container.append(yes, no);
}

// -- span --------------------------------------------------------------------

function renderSpan(container: HTMLElement, task: SpanTask): void {
    container.append(el('h2', '', 'Mark the slot value'), el('p', 'instructions', describeSpanTask(task)));
    const text = el('p', 'selectable', task.utterance);
    text.id = 'span-text';
    container.append(text);
    const preview = el('p', 'pair', 'Selection: (none)');
    container.append(preview);
    const submit = el('button', 'submit', 'Submit span');
    submit.disabled = true;
    let current: { start: number; end: number } | null = null;

    document.addEventListener('selectionchange', () => {
        const selection = document.getSelection();
        current = null;
        if (selection && selection.rangeCount > 0) {
            const range = selection.getRangeAt(0);
            if (
                range.startContainer === text.firstChild &&
                range.endContainer === text.firstChild
            ) {
                current = selectionToSpan(task.utterance, range.startOffset, range.endOffset);
            }
        }
        submit.disabled = current === null;
        preview.textContent = current
            ? `Selection: "${selectedText(task.utterance, current)}"`
            : 'Selection: (none)';
    });
    submit.addEventListener('click', () => {
        if (current !== null)
            submitAndAdvance(task.task_id, spanPayload(workerId(), current));
    });
    container.append(submit);
}

// -- rate --------------------------------------------------------------------

function renderRate(container: HTMLElement, task: RateTask): void {
    container.append(el('h2', '', `Rate this ${speakerLabel(task.speaker).toLowerCase()} turn`));
    const context = el('div', 'context');
    task.context.forEach((turn, i) => {
        const row = el('div', i === task.turn_index ? 'turn focus' : 'turn dim');
        row.append(el('span', `speaker ${turn.speaker}`, speakerLabel(turn.speaker)));
        row.append(el('span', 'template', turn.utterance));
        context.append(row);
    });
    container.append(context);

    const scores = new Map<string, number>();
    const submit = el('button', 'submit', 'Submit ratings');
    submit.disabled = true;
    const dims = task.dimensions.length ? task.dimensions : expectedDimensions(task.speaker);
    for (const dim of dims) {
        const row = el('div', 'rating-row');
        row.append(el('span', 'dim', dim));
        for (let score = 1; score <= 5; score++) {
            const button = el('button', 'score', String(score));
            button.addEventListener('click', () => {
                scores.set(dim, score);
                row.querySelectorAll('button').forEach((b) => b.classList.remove('picked'));
                button.classList.add('picked');
                submit.disabled = !ratingComplete(scores, task);
            });
            row.append(button);
        }
        container.append(row);
    }
    submit.addEventListener('click', () =>
        submitAndAdvance(task.task_id, ratingPayload(workerId(), scores)),
    );
    container.append(submit);
}

// -- bootstrap -----------------------------------------------------------------

export function start(): void {
    const tabs = document.getElementById('tabs')!;
    for (const { id, label } of TASK_TYPES) {
        const tab = el('button', id === currentType ? 'tab active' : 'tab', label);
        tab.addEventListener('click', () => {
            currentType = id;
            tabs.querySelectorAll('.tab').forEach((t) => t.classList.remove('active'));
            tab.classList.add('active');
            void loadNext();
        });
        tabs.append(tab);
    }
    document.getElementById('next')!.addEventListener('click', () => void loadNext());
    void refreshStatus();
}

if (typeof document !== 'undefined' && document.getElementById('tabs'))
    start();
